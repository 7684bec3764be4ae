//! Expenditure models.
//!
//! Three variants of the expenditure functional, all evaluated per
//! projection date as a sum over cohorts of head-count × utilization ×
//! per-capita cost:
//!
//! * `PD` (pure demographic): the cost profile is held fixed.
//! * `CH` (constant health): each cohort is priced at a younger effective
//!   age, shifted by the health-improvement rate times the years elapsed
//!   since the base date.
//! * `DC` (death-related costs): the base-date cost is split into survivor
//!   and decedent costs via the D/S ratio, then re-weighted by the death
//!   probability at each date.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{CohortGrid, STEP_YEARS};
use crate::population::{MortalityTable, PopulationPath};
use crate::rr::{Service, UtilizationRRSet};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    PureDemographic,
    ConstantHealth,
    DeathRelatedCosts,
}

impl Model {
    pub const ALL: [Model; 3] = [
        Model::PureDemographic,
        Model::ConstantHealth,
        Model::DeathRelatedCosts,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Model::PureDemographic => "PD",
            Model::ConstantHealth => "CH",
            Model::DeathRelatedCosts => "DC",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| Error::Unresolvable {
                kind: "model",
                id: s.to_string(),
                valid: Model::ALL.iter().map(|m| m.code().to_string()).collect(),
            })
    }
}

/// Per-capita annual public healthcare cost by cohort, EUR.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    pub id: String,
    grid: CohortGrid,
    per_capita: Vec<f64>,
}

impl CostProfile {
    pub fn new(id: impl Into<String>, grid: CohortGrid, per_capita: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if per_capita.len() != grid.len() {
            return Err(Error::InvalidValue(format!(
                "cost profile {id}: {} values for {} cohorts",
                per_capita.len(),
                grid.len()
            )));
        }
        if let Some(bad) = per_capita.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidValue(format!(
                "cost profile {id}: cost {bad} is not a non-negative number"
            )));
        }
        Ok(CostProfile {
            id,
            grid,
            per_capita,
        })
    }

    pub fn grid(&self) -> &CohortGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.per_capita
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.grid.clone(),
            self.per_capita.iter().map(|c| c * factor).collect(),
        )
    }
}

/// Deceased/survivor cost ratio by cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct DSRatioProfile {
    pub scenario: String,
    grid: CohortGrid,
    ratio: Vec<f64>,
}

impl DSRatioProfile {
    pub fn new(scenario: impl Into<String>, grid: CohortGrid, ratio: Vec<f64>) -> Result<Self> {
        let scenario = scenario.into();
        if ratio.len() != grid.len() {
            return Err(Error::InvalidValue(format!(
                "D/S scenario {scenario}: {} ratios for {} cohorts",
                ratio.len(),
                grid.len()
            )));
        }
        if let Some(bad) = ratio.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidValue(format!(
                "D/S scenario {scenario}: ratio {bad} must be positive"
            )));
        }
        Ok(DSRatioProfile {
            scenario,
            grid,
            ratio,
        })
    }

    pub fn uniform(scenario: impl Into<String>, grid: CohortGrid, ratio: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(scenario, grid, vec![ratio; n])
    }

    pub fn grid(&self) -> &CohortGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.ratio
    }
}

/// Fractions of total expenditure by service type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpenditureShares {
    fractions: [f64; 6],
}

impl ExpenditureShares {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(entries: impl IntoIterator<Item = (Service, f64)>) -> Result<Self> {
        let mut fractions = [f64::NAN; 6];
        for (svc, f) in entries {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidShares(format!("{svc} = {f} outside [0, 1]")));
            }
            fractions[svc.index()] = f;
        }
        if let Some(missing) = Service::ALL.iter().find(|s| fractions[s.index()].is_nan()) {
            return Err(Error::InvalidShares(format!("missing service {missing}")));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidShares(format!(
                "fractions sum to {sum}, not 1"
            )));
        }
        Ok(ExpenditureShares { fractions })
    }

    /// The 2008 split: H 71%, P 10%, S 4%, GP 6%, R 2%, m 7%.
    pub fn italy_2008() -> Self {
        Self::new([
            (Service::Hospital, 0.71),
            (Service::Pharmaceutical, 0.10),
            (Service::Specialistic, 0.04),
            (Service::GeneralPractice, 0.06),
            (Service::Rehabilitation, 0.02),
            (Service::Minor, 0.07),
        ])
        .expect("built-in shares are valid")
    }

    pub fn get(&self, service: Service) -> f64 {
        self.fractions[service.index()]
    }
}

/// GDP by date, EUR millions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GdpPath {
    values: BTreeMap<i32, f64>,
}

impl GdpPath {
    pub fn new(values: impl IntoIterator<Item = (i32, f64)>) -> Result<Self> {
        let values: BTreeMap<i32, f64> = values.into_iter().collect();
        if let Some((date, v)) = values.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidValue(format!(
                "GDP at {date} must be positive, got {v}"
            )));
        }
        Ok(GdpPath { values })
    }

    pub fn at(&self, date: i32) -> Option<f64> {
        self.values.get(&date).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values.iter().map(|(d, v)| (*d, *v))
    }
}

/// The residual parameter bundle shared by every model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    /// Per-cohort utilization multiplier; `None` means 1 everywhere.
    pub utilization: Option<Vec<f64>>,
    /// Years of effective-age gain per calendar year (CH model).
    pub health_improvement_rate: f64,
    /// Date at which the CH shift is zero and the DC split is solved.
    pub base_date: i32,
    pub gdp: Option<GdpPath>,
}

impl Default for ModelParameters {
    fn default() -> Self {
        ModelParameters {
            utilization: None,
            health_improvement_rate: 0.25,
            base_date: 2010,
            gdp: None,
        }
    }
}

impl ModelParameters {
    fn utilization_for(&self, grid: &CohortGrid) -> Result<Vec<f64>> {
        match &self.utilization {
            None => Ok(vec![1.0; grid.len()]),
            Some(u) if u.len() != grid.len() => Err(Error::GridMismatch(format!(
                "utilization has {} entries for {} cohorts",
                u.len(),
                grid.len()
            ))),
            Some(u) => {
                if let Some(bad) = u.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::InvalidValue(format!(
                        "utilization multiplier {bad} must be non-negative"
                    )));
                }
                Ok(u.clone())
            }
        }
    }

    fn check_rate(&self) -> Result<()> {
        let r = self.health_improvement_rate;
        if r.is_finite() && r >= 0.0 {
            Ok(())
        } else {
            Err(Error::NegativeImprovementRate(r))
        }
    }
}

/// Total expenditure per date, EUR millions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpenditurePath {
    pub model: Model,
    pub dates: Vec<i32>,
    pub eur_millions: Vec<f64>,
    pub gdp_eur_millions: Vec<Option<f64>>,
}

impl ExpenditurePath {
    pub fn at(&self, date: i32) -> Option<f64> {
        self.dates
            .iter()
            .position(|d| *d == date)
            .map(|i| self.eur_millions[i])
    }

    /// Expenditure as a fraction of GDP, where GDP is known.
    pub fn gdp_shares(&self) -> Vec<Option<f64>> {
        self.eur_millions
            .iter()
            .zip(&self.gdp_eur_millions)
            .map(|(e, g)| g.map(|g| units::gdp_share(*e, g)))
            .collect()
    }
}

/// Σ_a N(a)·u(a)·cost(a) in EUR millions. Every model sums in this order.
fn weighted_sum(counts: &[f64], utilization: &[f64], cost: impl Fn(usize) -> f64) -> f64 {
    let total: f64 = counts
        .iter()
        .zip(utilization)
        .enumerate()
        .map(|(a, (n, u))| n * u * cost(a))
        .sum();
    units::thousand_eur_to_eur_millions(total)
}

/// Piecewise-linear interpolation with flat extrapolation at both ends.
/// Returns node values untouched when `x` lands on a node.
pub fn interpolate_flat(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    if xs[i] == x {
        return ys[i];
    }
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Annual death probability from a 5-year one, assuming a constant hazard.
pub fn annual_death_probability(pd_5yr: f64) -> f64 {
    1.0 - (1.0 - pd_5yr).powf(1.0 / STEP_YEARS as f64)
}

/// Survivor and decedent per-capita costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSplit {
    pub survivor: Vec<f64>,
    pub decedent: Vec<f64>,
}

/// Splits `costs` into survivor and decedent costs at `date`.
///
/// Solves c = s·(1 − q) + ds·s·q for s, with q the annual death
/// probability; the decedent cost is ds·s.
pub fn decompose_costs(
    costs: &CostProfile,
    ds: &DSRatioProfile,
    mortality: &MortalityTable,
    date: i32,
) -> Result<CostSplit> {
    costs.grid().ensure_same(ds.grid(), "D/S ratio profile")?;
    costs
        .grid()
        .ensure_same(mortality.grid(), "mortality table")?;
    let pd = mortality.at(date)?;

    let mut survivor = Vec::with_capacity(pd.len());
    let mut decedent = Vec::with_capacity(pd.len());
    for (a, cohort) in costs.grid().cohorts().iter().enumerate() {
        let q = annual_death_probability(pd[a]);
        let ratio = ds.values()[a];
        let denominator = (1.0 - q) + q * ratio;
        if denominator.is_nan() || denominator <= 0.0 {
            return Err(Error::DegenerateDenominator {
                cohort: cohort.to_string(),
                denominator,
            });
        }
        let s = costs.values()[a] / denominator;
        survivor.push(s);
        decedent.push(ratio * s);
    }
    Ok(CostSplit { survivor, decedent })
}

fn pd_at(pop: &PopulationPath, costs: &CostProfile, u: &[f64], date: i32) -> Result<f64> {
    let counts = pop.at(date)?;
    let c = costs.values();
    Ok(weighted_sum(counts, u, |a| c[a]))
}

fn ch_at(
    pop: &PopulationPath,
    costs: &CostProfile,
    u: &[f64],
    params: &ModelParameters,
    midpoints: &[f64],
    date: i32,
) -> Result<f64> {
    let counts = pop.at(date)?;
    let shift = params.health_improvement_rate * (date - params.base_date) as f64;
    let c = costs.values();
    Ok(weighted_sum(counts, u, |a| {
        interpolate_flat(midpoints, c, midpoints[a] - shift)
    }))
}

fn dc_at(
    pop: &PopulationPath,
    split: &CostSplit,
    mortality: &MortalityTable,
    u: &[f64],
    date: i32,
) -> Result<f64> {
    let counts = pop.at(date)?;
    let pd = mortality.at(date)?;
    Ok(weighted_sum(counts, u, |a| {
        let q = annual_death_probability(pd[a]);
        split.survivor[a] * (1.0 - q) + split.decedent[a] * q
    }))
}

/// Everything a model evaluation can depend on.
#[derive(Debug, Clone, Copy)]
pub struct ModelInputs<'a> {
    pub population: &'a PopulationPath,
    pub costs: &'a CostProfile,
    pub ds: &'a DSRatioProfile,
    /// Mortality in force at the evaluation date, possibly shocked.
    pub mortality: &'a MortalityTable,
    /// Mortality used to solve the DC survivor/decedent split.
    pub base_mortality: &'a MortalityTable,
    pub params: &'a ModelParameters,
}

impl ModelInputs<'_> {
    fn check(&self, model: Model) -> Result<Vec<f64>> {
        let grid = self.population.grid();
        grid.ensure_same(self.costs.grid(), "cost profile")?;
        if model != Model::PureDemographic {
            grid.ensure_same(self.mortality.grid(), "mortality table")?;
        }
        if model == Model::ConstantHealth {
            self.params.check_rate()?;
        }
        if model == Model::DeathRelatedCosts {
            grid.ensure_same(self.ds.grid(), "D/S ratio profile")?;
            grid.ensure_same(self.base_mortality.grid(), "base mortality table")?;
        }
        self.params.utilization_for(grid)
    }
}

/// Expenditure at one date under `model`, EUR millions.
pub fn evaluate_at(model: Model, inputs: &ModelInputs<'_>, date: i32) -> Result<f64> {
    let u = inputs.check(model)?;
    let value = match model {
        Model::PureDemographic => pd_at(inputs.population, inputs.costs, &u, date)?,
        Model::ConstantHealth => {
            inputs.mortality.at(date)?;
            let mids = inputs.population.grid().midpoints();
            ch_at(
                inputs.population,
                inputs.costs,
                &u,
                inputs.params,
                &mids,
                date,
            )?
        }
        Model::DeathRelatedCosts => {
            let split = decompose_costs(
                inputs.costs,
                inputs.ds,
                inputs.base_mortality,
                inputs.params.base_date,
            )?;
            dc_at(inputs.population, &split, inputs.mortality, &u, date)?
        }
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("{model} expenditure at {date}")));
    }
    Ok(value)
}

fn build_path(
    model: Model,
    pop: &PopulationPath,
    params: &ModelParameters,
    mut at: impl FnMut(i32) -> Result<f64>,
) -> Result<ExpenditurePath> {
    let dates = pop.dates().to_vec();
    let eur_millions = dates.iter().map(|d| at(*d)).collect::<Result<Vec<_>>>()?;
    if let Some(i) = eur_millions.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "{model} expenditure at {}",
            dates[i]
        )));
    }
    let gdp_eur_millions = dates
        .iter()
        .map(|d| params.gdp.as_ref().and_then(|g| g.at(*d)))
        .collect();
    Ok(ExpenditurePath {
        model,
        dates,
        eur_millions,
        gdp_eur_millions,
    })
}

/// Pure-demographic path: Σ N·u·c at every population date.
pub fn expenditure_pd(
    pop: &PopulationPath,
    costs: &CostProfile,
    params: &ModelParameters,
) -> Result<ExpenditurePath> {
    pop.grid().ensure_same(costs.grid(), "cost profile")?;
    let u = params.utilization_for(pop.grid())?;
    build_path(Model::PureDemographic, pop, params, |d| {
        pd_at(pop, costs, &u, d)
    })
}

/// Constant-health path. Mortality enters only through its date coverage;
/// the cost improvement is driven by the health-improvement rate.
pub fn expenditure_ch(
    pop: &PopulationPath,
    costs: &CostProfile,
    mortality: &MortalityTable,
    params: &ModelParameters,
) -> Result<ExpenditurePath> {
    pop.grid().ensure_same(costs.grid(), "cost profile")?;
    pop.grid()
        .ensure_same(mortality.grid(), "mortality table")?;
    params.check_rate()?;
    let u = params.utilization_for(pop.grid())?;
    let mids = pop.grid().midpoints();
    build_path(Model::ConstantHealth, pop, params, |d| {
        mortality.at(d)?;
        ch_at(pop, costs, &u, params, &mids, d)
    })
}

/// Death-related-costs path, with the split solved at the base date of the
/// same mortality table.
pub fn expenditure_dc(
    pop: &PopulationPath,
    costs: &CostProfile,
    ds: &DSRatioProfile,
    mortality: &MortalityTable,
    params: &ModelParameters,
) -> Result<ExpenditurePath> {
    expenditure_dc_with_base(pop, costs, ds, mortality, mortality, params)
}

/// Death-related-costs path where the split is solved on `base_mortality`
/// and the re-weighting uses `mortality`.
pub fn expenditure_dc_with_base(
    pop: &PopulationPath,
    costs: &CostProfile,
    ds: &DSRatioProfile,
    mortality: &MortalityTable,
    base_mortality: &MortalityTable,
    params: &ModelParameters,
) -> Result<ExpenditurePath> {
    pop.grid().ensure_same(costs.grid(), "cost profile")?;
    pop.grid()
        .ensure_same(mortality.grid(), "mortality table")?;
    let u = params.utilization_for(pop.grid())?;
    let split = decompose_costs(costs, ds, base_mortality, params.base_date)?;
    build_path(Model::DeathRelatedCosts, pop, params, |d| {
        dc_at(pop, &split, mortality, &u, d)
    })
}

/// Service-mix rescaling factor Σ_k RR_k·share_k.
///
/// Evaluated as 1 + Σ_k share_k·(RR_k − 1), equal under the sum-to-one
/// constraint and exactly 1 when every RR is 1.
pub fn rescaling_factor(shares: &ExpenditureShares, rrs: &UtilizationRRSet) -> Result<f64> {
    let mut excess = 0.0;
    for svc in Service::ALL {
        let rr = rrs.get(svc).ok_or(Error::IncompleteRrSet(svc))?;
        if !rr.diluted {
            return Err(Error::UndilutedRisk(svc));
        }
        excess += shares.get(svc) * (rr.value - 1.0);
    }
    Ok(1.0 + excess)
}
