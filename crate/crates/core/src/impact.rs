//! Differential crisis-impact estimators.
//!
//! Both estimators difference two evaluations of the same expenditure model
//! at the shock date against the base scenario:
//!
//! * CRIMI perturbs mortality at the shock date by the mortality RRs.
//! * CRIUI rescales the cost profile by the service-mix factor RF.
//!
//! CRI is their sum. Population at the shock date is the base-scenario
//! population: the survival effect of the shock only reaches later dates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expenditure::{
    evaluate_at, rescaling_factor, CostProfile, DSRatioProfile, ExpenditureShares, GdpPath, Model,
    ModelInputs, ModelParameters,
};
use crate::population::{MortalityTable, PopulationPath};
use crate::rr::{
    apply_mortality_shock, build_rr_envelope, EnvelopePolicy, LaborMarketState, MortalityRRTable,
    RrBound, StudyRecord, UtilizationRRSet,
};
use crate::units;

pub const DEFAULT_SHOCK_DATE: i32 = 2015;

/// Which mortality RRs perturb the base mortality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MortalityRrSelector {
    Lower,
    Upper,
    /// The same RR' for every cohort.
    Uniform(f64),
}

impl fmt::Display for MortalityRrSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MortalityRrSelector::Lower => f.write_str("lower"),
            MortalityRrSelector::Upper => f.write_str("upper"),
            MortalityRrSelector::Uniform(v) => write!(f, "uniform:{v}"),
        }
    }
}

impl FromStr for MortalityRrSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => return Ok(MortalityRrSelector::Lower),
            "upper" => return Ok(MortalityRrSelector::Upper),
            _ => {}
        }
        let number = s.strip_prefix("uniform:").unwrap_or(s);
        match number.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(MortalityRrSelector::Uniform(v)),
            _ => Err(Error::Unresolvable {
                kind: "mortality RR selection",
                id: s.to_string(),
                valid: vec!["lower".into(), "upper".into(), "uniform:<value>".into()],
            }),
        }
    }
}

/// Which utilization RRs (or a direct RF) rescale the costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilizationSelector {
    Lower,
    Upper,
    UniformRf(f64),
}

impl fmt::Display for UtilizationSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilizationSelector::Lower => f.write_str("lower"),
            UtilizationSelector::Upper => f.write_str("upper"),
            UtilizationSelector::UniformRf(v) => write!(f, "rf:{v}"),
        }
    }
}

impl FromStr for UtilizationSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => return Ok(UtilizationSelector::Lower),
            "upper" => return Ok(UtilizationSelector::Upper),
            _ => {}
        }
        let number = s.strip_prefix("rf:").unwrap_or(s);
        match number.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(UtilizationSelector::UniformRf(v)),
            _ => Err(Error::Unresolvable {
                kind: "utilization RR selection",
                id: s.to_string(),
                valid: vec!["lower".into(), "upper".into(), "rf:<value>".into()],
            }),
        }
    }
}

/// Source of the per-cohort mortality RR bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum MortalityRrSource {
    /// Study records, enveloped after dilution with the scenario's labor state.
    Records {
        records: Vec<StudyRecord>,
        policy: EnvelopePolicy,
    },
    /// A ready-made diluted table.
    Table(MortalityRRTable),
}

/// All loaded data a scenario can refer to.
#[derive(Debug, Clone)]
pub struct ScenarioInputs {
    pub populations: BTreeMap<String, PopulationPath>,
    pub mortality: MortalityTable,
    pub cost_profiles: BTreeMap<String, CostProfile>,
    pub ds_profiles: BTreeMap<String, DSRatioProfile>,
    pub mortality_rr: MortalityRrSource,
    pub utilization_lower: UtilizationRRSet,
    pub utilization_upper: UtilizationRRSet,
    pub shares: ExpenditureShares,
    pub gdp: GdpPath,
    pub params: ModelParameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub population: String,
    pub model: Model,
    pub cost_profile: String,
    pub ds_scenario: String,
    pub mortality_rr: MortalityRrSelector,
    pub utilization: UtilizationSelector,
    pub shock_date: i32,
    pub labor: LaborMarketState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactResult {
    pub date: i32,
    pub crimi_eur_m: f64,
    pub criui_eur_m: f64,
    pub cri_eur_m: f64,
    /// Base-scenario expenditure at the shock date.
    pub base_eur_m: f64,
    pub rf: f64,
    pub gdp_eur_m: f64,
}

impl ImpactResult {
    pub fn crimi_gdp_share(&self) -> f64 {
        units::gdp_share(self.crimi_eur_m, self.gdp_eur_m)
    }

    pub fn criui_gdp_share(&self) -> f64 {
        units::gdp_share(self.criui_eur_m, self.gdp_eur_m)
    }

    pub fn cri_gdp_share(&self) -> f64 {
        units::gdp_share(self.cri_eur_m, self.gdp_eur_m)
    }
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, kind: &'static str, id: &str) -> Result<&'a T> {
    map.get(id).ok_or_else(|| Error::Unresolvable {
        kind,
        id: id.to_string(),
        valid: map.keys().cloned().collect(),
    })
}

/// A scenario with every id looked up and every selector turned into numbers.
struct Resolved<'a> {
    population: &'a PopulationPath,
    costs: &'a CostProfile,
    ds: &'a DSRatioProfile,
    mortality: &'a MortalityTable,
    shocked_mortality: MortalityTable,
    rf: f64,
    gdp: f64,
    params: &'a ModelParameters,
}

impl ScenarioInputs {
    pub fn mortality_rr_table(&self, labor: &LaborMarketState) -> Result<MortalityRRTable> {
        match &self.mortality_rr {
            MortalityRrSource::Records { records, policy } => {
                build_rr_envelope(records, labor, self.mortality.grid(), policy)
            }
            MortalityRrSource::Table(t) => Ok(t.clone()),
        }
    }

    pub fn rescaling_factor(
        &self,
        selector: UtilizationSelector,
        labor: &LaborMarketState,
    ) -> Result<f64> {
        let rf = match selector {
            UtilizationSelector::UniformRf(v) => v,
            UtilizationSelector::Lower => {
                rescaling_factor(&self.shares, &self.utilization_lower.normalized(labor)?)?
            }
            UtilizationSelector::Upper => {
                rescaling_factor(&self.shares, &self.utilization_upper.normalized(labor)?)?
            }
        };
        if !(rf.is_finite() && rf >= 0.0) {
            return Err(Error::NegativeRescalingFactor(rf));
        }
        Ok(rf)
    }

    fn resolve(&self, config: &ScenarioConfig) -> Result<Resolved<'_>> {
        let population = lookup(&self.populations, "population scenario", &config.population)?;
        let costs = lookup(&self.cost_profiles, "cost profile", &config.cost_profile)?;
        let ds = lookup(&self.ds_profiles, "D/S scenario", &config.ds_scenario)?;
        if !population.dates().contains(&config.shock_date) {
            return Err(Error::DateOffGrid(config.shock_date));
        }

        let (rr_table, bound) = match config.mortality_rr {
            MortalityRrSelector::Lower => (self.mortality_rr_table(&config.labor)?, RrBound::Lower),
            MortalityRrSelector::Upper => (self.mortality_rr_table(&config.labor)?, RrBound::Upper),
            MortalityRrSelector::Uniform(v) => (
                MortalityRRTable::uniform(self.mortality.grid().clone(), v)?,
                RrBound::Lower,
            ),
        };
        let shocked_mortality =
            apply_mortality_shock(&self.mortality, &rr_table, bound, config.shock_date)?;
        let rf = self.rescaling_factor(config.utilization, &config.labor)?;
        let gdp = self.gdp.at(config.shock_date).ok_or_else(|| {
            Error::InvalidValue(format!("GDP path has no value for {}", config.shock_date))
        })?;

        Ok(Resolved {
            population,
            costs,
            ds,
            mortality: &self.mortality,
            shocked_mortality,
            rf,
            gdp,
            params: &self.params,
        })
    }
}

impl<'a> Resolved<'a> {
    fn inputs(&self, costs: &'a CostProfile, mortality: &'a MortalityTable) -> ModelInputs<'a> {
        ModelInputs {
            population: self.population,
            costs,
            ds: self.ds,
            mortality,
            base_mortality: self.mortality,
            params: self.params,
        }
    }

    fn base(&self, model: Model, date: i32) -> Result<f64> {
        evaluate_at(model, &self.inputs(self.costs, self.mortality), date)
    }

    fn crimi(&self, model: Model, date: i32, base: f64) -> Result<f64> {
        let shocked = ModelInputs {
            mortality: &self.shocked_mortality,
            ..self.inputs(self.costs, self.mortality)
        };
        Ok(evaluate_at(model, &shocked, date)? - base)
    }

    fn criui(&self, model: Model, date: i32, base: f64) -> Result<f64> {
        let scaled = self.costs.scaled(self.rf)?;
        let inputs = ModelInputs {
            costs: &scaled,
            ..self.inputs(self.costs, self.mortality)
        };
        Ok(evaluate_at(model, &inputs, date)? - base)
    }
}

/// Expenditure change at the shock date caused by the mortality shock.
pub fn crimi(inputs: &ScenarioInputs, config: &ScenarioConfig) -> Result<f64> {
    let r = inputs.resolve(config)?;
    let base = r.base(config.model, config.shock_date)?;
    r.crimi(config.model, config.shock_date, base)
}

/// Expenditure change at the shock date caused by the utilization increase.
pub fn criui(inputs: &ScenarioInputs, config: &ScenarioConfig) -> Result<f64> {
    let r = inputs.resolve(config)?;
    let base = r.base(config.model, config.shock_date)?;
    r.criui(config.model, config.shock_date, base)
}

/// Both components over one shared base evaluation.
pub fn cri(inputs: &ScenarioInputs, config: &ScenarioConfig) -> Result<ImpactResult> {
    let r = inputs.resolve(config)?;
    let date = config.shock_date;
    let base = r.base(config.model, date)?;
    let crimi_eur_m = r.crimi(config.model, date, base)?;
    let criui_eur_m = r.criui(config.model, date, base)?;
    Ok(ImpactResult {
        date,
        crimi_eur_m,
        criui_eur_m,
        cri_eur_m: crimi_eur_m + criui_eur_m,
        base_eur_m: base,
        rf: r.rf,
        gdp_eur_m: r.gdp,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityAxes {
    pub models: Vec<Model>,
    pub populations: Vec<String>,
    pub mortality_rr: Vec<MortalityRrSelector>,
    pub utilization: Vec<UtilizationSelector>,
}

impl SensitivityAxes {
    pub fn len(&self) -> usize {
        self.models.len()
            * self.populations.len()
            * self.mortality_rr.len()
            * self.utilization.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub model: Model,
    pub population: String,
    pub mortality_rr: MortalityRrSelector,
    pub utilization: UtilizationSelector,
    pub result: ImpactResult,
}

/// Evaluates the full Cartesian product of `axes` around `base`.
///
/// Rows come back in axis order (models, then populations, then mortality
/// selections, then utilization selections), whatever the evaluation order.
pub fn sensitivity_grid(
    inputs: &ScenarioInputs,
    base: &ScenarioConfig,
    axes: &SensitivityAxes,
) -> Result<Vec<SensitivityRow>> {
    for (name, len) in [
        ("models", axes.models.len()),
        ("populations", axes.populations.len()),
        ("mortality_rr", axes.mortality_rr.len()),
        ("utilization", axes.utilization.len()),
    ] {
        if len == 0 {
            return Err(Error::EmptyAxis(name));
        }
    }

    let mut configs = Vec::with_capacity(axes.len());
    for model in &axes.models {
        for population in &axes.populations {
            for mortality_rr in &axes.mortality_rr {
                for utilization in &axes.utilization {
                    configs.push(ScenarioConfig {
                        model: *model,
                        population: population.clone(),
                        mortality_rr: *mortality_rr,
                        utilization: *utilization,
                        ..base.clone()
                    });
                }
            }
        }
    }

    configs
        .par_iter()
        .map(|config| {
            Ok(SensitivityRow {
                model: config.model,
                population: config.population.clone(),
                mortality_rr: config.mortality_rr,
                utilization: config.utilization,
                result: cri(inputs, config)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CohortGrid;
    use crate::rr::{RelativeRisk, Service};

    fn inputs() -> ScenarioInputs {
        let grid = CohortGrid::five_year_bands(0, 3);
        let dates = vec![2010, 2015, 2020];
        let pop = PopulationPath::new(
            "P1",
            grid.clone(),
            dates.clone(),
            vec![vec![300.0, 200.0, 100.0]; 3],
        )
        .unwrap();
        let mortality = MortalityTable::new(
            grid.clone(),
            dates,
            vec![
                vec![0.01, 0.05, 0.30],
                vec![0.009, 0.045, 0.28],
                vec![0.008, 0.04, 0.26],
            ],
        )
        .unwrap();
        let lower = UtilizationRRSet::new([
            (Service::Hospital, RelativeRisk::undiluted(1.33)),
            (Service::Specialistic, RelativeRisk::undiluted(1.63)),
            (Service::GeneralPractice, RelativeRisk::undiluted(1.20)),
        ])
        .unwrap();
        let upper = UtilizationRRSet::new([
            (Service::Hospital, RelativeRisk::undiluted(2.00)),
            (Service::Specialistic, RelativeRisk::undiluted(1.63)),
            (Service::GeneralPractice, RelativeRisk::undiluted(1.57)),
        ])
        .unwrap();
        ScenarioInputs {
            populations: [("P1".to_string(), pop)].into(),
            mortality,
            cost_profiles: [(
                "ARC1".to_string(),
                CostProfile::new("ARC1", grid.clone(), vec![800.0, 1_500.0, 4_000.0]).unwrap(),
            )]
            .into(),
            ds_profiles: [(
                "DS1".to_string(),
                DSRatioProfile::new("DS1", grid.clone(), vec![8.0, 5.0, 2.0]).unwrap(),
            )]
            .into(),
            mortality_rr: MortalityRrSource::Table(
                MortalityRRTable::new(grid, vec![1.0, 1.5, 1.0], vec![1.0, 1.8, 1.1]).unwrap(),
            ),
            utilization_lower: lower,
            utilization_upper: upper,
            shares: ExpenditureShares::italy_2008(),
            gdp: GdpPath::new([(2015, 1_520_346.0)]).unwrap(),
            params: ModelParameters::default(),
        }
    }

    fn config(model: Model) -> ScenarioConfig {
        ScenarioConfig {
            population: "P1".into(),
            model,
            cost_profile: "ARC1".into(),
            ds_scenario: "DS1".into(),
            mortality_rr: MortalityRrSelector::Lower,
            utilization: UtilizationSelector::Lower,
            shock_date: 2015,
            labor: LaborMarketState::new(0.1).unwrap(),
        }
    }

    #[test]
    fn trivial_shocks_are_zero() {
        let inputs = inputs();
        for model in Model::ALL {
            let cfg = ScenarioConfig {
                mortality_rr: MortalityRrSelector::Uniform(1.0),
                utilization: UtilizationSelector::UniformRf(1.0),
                ..config(model)
            };
            let r = cri(&inputs, &cfg).unwrap();
            assert_eq!((r.crimi_eur_m, r.criui_eur_m, r.cri_eur_m), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn crimi_vanishes_for_pd_and_ch() {
        let inputs = inputs();
        for model in [Model::PureDemographic, Model::ConstantHealth] {
            assert_eq!(crimi(&inputs, &config(model)).unwrap(), 0.0);
        }
    }

    #[test]
    fn crimi_dc_matches_hand_differenced_evaluations() {
        let inputs = inputs();
        let cfg = config(Model::DeathRelatedCosts);
        let got = crimi(&inputs, &cfg).unwrap();

        // Re-derive both evaluations independently of the impact module.
        let counts = [300.0, 200.0, 100.0];
        let cost = [800.0, 1_500.0, 4_000.0];
        let ratio = [8.0, 5.0, 2.0];
        let pd_base_date = [0.01, 0.05, 0.30];
        let pd_2015 = [0.009, 0.045, 0.28];
        let rr = [1.0, 1.5, 1.0];
        let annual = |p: f64| 1.0 - (1.0 - p).powf(0.2);
        let eval = |pd: &[f64]| -> f64 {
            (0..3)
                .map(|a| {
                    let q0 = annual(pd_base_date[a]);
                    let s = cost[a] / (1.0 - q0 + q0 * ratio[a]);
                    let q = annual(pd[a]);
                    counts[a] * (s * (1.0 - q) + ratio[a] * s * q)
                })
                .sum::<f64>()
                / 1_000.0
        };
        let shocked: Vec<f64> = pd_2015.iter().zip(rr).map(|(p, r)| p * r).collect();
        let expected = eval(&shocked) - eval(&pd_2015);
        assert!(expected > 0.0);
        assert!(
            ((got - expected) / expected).abs() < 1e-9,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn criui_identity() {
        let inputs = inputs();
        for model in Model::ALL {
            let cfg = ScenarioConfig {
                utilization: UtilizationSelector::UniformRf(1.05),
                ..config(model)
            };
            let r = cri(&inputs, &cfg).unwrap();
            let expected = 0.05 * r.base_eur_m;
            assert!(((r.criui_eur_m - expected) / expected).abs() < 1e-9);
            assert_eq!(r.cri_eur_m, r.crimi_eur_m + r.criui_eur_m);
        }
    }

    #[test]
    fn rf_from_diluted_study_values() {
        let inputs = inputs();
        let labor = LaborMarketState::new(0.1).unwrap();
        let lo = inputs
            .rescaling_factor(UtilizationSelector::Lower, &labor)
            .unwrap();
        let hi = inputs
            .rescaling_factor(UtilizationSelector::Upper, &labor)
            .unwrap();
        assert!((lo - 1.02715).abs() < 1e-9);
        assert!((hi - 1.07694).abs() < 1e-9);
        assert!(matches!(
            inputs.rescaling_factor(UtilizationSelector::UniformRf(-0.2), &labor),
            Err(Error::NegativeRescalingFactor(_))
        ));
    }

    #[test]
    fn unresolvable_ids() {
        let inputs = inputs();
        let cfg = ScenarioConfig {
            population: "PopXX".into(),
            ..config(Model::PureDemographic)
        };
        let err = cri(&inputs, &cfg).unwrap_err();
        assert!(matches!(err, Error::Unresolvable { .. }));
        assert!(err.to_string().contains("P1"));
        let cfg = ScenarioConfig {
            shock_date: 2030,
            ..config(Model::PureDemographic)
        };
        assert!(matches!(cri(&inputs, &cfg), Err(Error::DateOffGrid(2030))));
    }

    #[test]
    fn equal_bounds_give_identical_results() {
        let mut inputs = inputs();
        let grid = inputs.mortality.grid().clone();
        inputs.mortality_rr = MortalityRrSource::Table(
            MortalityRRTable::new(grid.clone(), vec![1.1, 1.2, 1.3], vec![1.1, 1.2, 1.3]).unwrap(),
        );
        let lo = cri(&inputs, &config(Model::DeathRelatedCosts)).unwrap();
        let hi = cri(
            &inputs,
            &ScenarioConfig {
                mortality_rr: MortalityRrSelector::Upper,
                ..config(Model::DeathRelatedCosts)
            },
        )
        .unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn grid_rows_match_direct_calls() {
        let inputs = inputs();
        let axes = SensitivityAxes {
            models: vec![Model::ConstantHealth, Model::DeathRelatedCosts],
            populations: vec!["P1".into()],
            mortality_rr: vec![
                MortalityRrSelector::Lower,
                MortalityRrSelector::Uniform(1.0),
            ],
            utilization: vec![
                UtilizationSelector::Upper,
                UtilizationSelector::UniformRf(1.0),
            ],
        };
        let base = config(Model::PureDemographic);
        let rows = sensitivity_grid(&inputs, &base, &axes).unwrap();
        assert_eq!(rows.len(), 8);
        for row in &rows {
            let direct = cri(
                &inputs,
                &ScenarioConfig {
                    model: row.model,
                    population: row.population.clone(),
                    mortality_rr: row.mortality_rr,
                    utilization: row.utilization,
                    ..base.clone()
                },
            )
            .unwrap();
            assert_eq!(row.result, direct);
        }
        let trivial = rows
            .iter()
            .find(|r| {
                r.mortality_rr == MortalityRrSelector::Uniform(1.0)
                    && r.utilization == UtilizationSelector::UniformRf(1.0)
            })
            .unwrap();
        assert_eq!(trivial.result.cri_eur_m, 0.0);
        assert_eq!(rows[0].model, Model::ConstantHealth);
        assert_eq!(rows[7].model, Model::DeathRelatedCosts);

        let empty = SensitivityAxes {
            models: vec![],
            ..axes
        };
        assert!(matches!(
            sensitivity_grid(&inputs, &base, &empty),
            Err(Error::EmptyAxis("models"))
        ));
    }

    #[test]
    fn selector_parsing() {
        assert_eq!(
            "uniform:1.05".parse::<MortalityRrSelector>().unwrap(),
            MortalityRrSelector::Uniform(1.05)
        );
        assert_eq!(
            "1.2".parse::<MortalityRrSelector>().unwrap(),
            MortalityRrSelector::Uniform(1.2)
        );
        assert_eq!(
            "rf:1.07".parse::<UtilizationSelector>().unwrap(),
            UtilizationSelector::UniformRf(1.07)
        );
        assert!("sideways".parse::<UtilizationSelector>().is_err());
        for s in ["lower", "upper", "uniform:1.5"] {
            assert_eq!(s.parse::<MortalityRrSelector>().unwrap().to_string(), s);
        }
    }
}
