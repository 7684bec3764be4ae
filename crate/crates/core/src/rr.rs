//! Relative risks and their dilution over the working-age population.
//!
//! Study RRs measured among the unemployed are "undiluted"; spreading the
//! excess risk over the whole working-age population with unemployment rate
//! `ω` gives the effective RR' = 1 + ω·(RR − 1). Population-level studies
//! report RR' directly and are flagged as already diluted.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Cohort, CohortGrid};
use crate::population::MortalityTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaborMarketState {
    unemployment_rate: f64,
}

impl LaborMarketState {
    pub fn new(unemployment_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&unemployment_rate) {
            return Err(Error::InvalidUnemploymentRate(unemployment_rate));
        }
        Ok(LaborMarketState { unemployment_rate })
    }

    pub fn unemployment_rate(&self) -> f64 {
        self.unemployment_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeRisk {
    pub value: f64,
    pub diluted: bool,
}

impl RelativeRisk {
    pub fn undiluted(value: f64) -> Self {
        RelativeRisk {
            value,
            diluted: false,
        }
    }

    pub fn diluted(value: f64) -> Self {
        RelativeRisk {
            value,
            diluted: true,
        }
    }

    /// Returns the diluted form, diluting only if needed.
    pub fn normalized(self, labor: &LaborMarketState) -> Result<Self> {
        check_rr(self.value)?;
        if self.diluted {
            Ok(self)
        } else {
            dilute_relative_risk(self, labor)
        }
    }
}

fn check_rr(value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeRelativeRisk(value))
    }
}

/// Spreads an unemployed-only RR over the working-age population.
pub fn dilute_relative_risk(rr: RelativeRisk, labor: &LaborMarketState) -> Result<RelativeRisk> {
    check_rr(rr.value)?;
    if rr.diluted {
        return Err(Error::AlreadyDiluted(rr.value));
    }
    let omega = labor.unemployment_rate();
    // Written as a convex combination so that ω = 0 and ω = 1 are exact.
    let raw = (1.0 - omega) + omega * rr.value;
    let value = raw.clamp(rr.value.min(1.0), rr.value.max(1.0));
    Ok(RelativeRisk::diluted(value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RrBound {
    Lower,
    Upper,
}

/// Per-cohort lower and upper diluted mortality RRs.
#[derive(Debug, Clone, PartialEq)]
pub struct MortalityRRTable {
    grid: CohortGrid,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl MortalityRRTable {
    pub fn new(grid: CohortGrid, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != grid.len() || upper.len() != grid.len() {
            let missing = grid.cohorts()[lower.len().min(upper.len()).min(grid.len() - 1)];
            return Err(Error::MissingCohort {
                what: "mortality RR table".into(),
                cohort: missing.to_string(),
            });
        }
        for ((lo, hi), cohort) in lower.iter().zip(&upper).zip(grid.cohorts()) {
            check_rr(*lo)?;
            check_rr(*hi)?;
            if lo > hi {
                return Err(Error::InvalidValue(format!(
                    "cohort {cohort}: lower RR {lo} exceeds upper RR {hi}"
                )));
            }
        }
        Ok(MortalityRRTable { grid, lower, upper })
    }

    /// The same RR for every cohort, as in the uniform sensitivity rows.
    pub fn uniform(grid: CohortGrid, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n], vec![value; n])
    }

    pub fn grid(&self) -> &CohortGrid {
        &self.grid
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn select(&self, bound: RrBound) -> &[f64] {
        match bound {
            RrBound::Lower => &self.lower,
            RrBound::Upper => &self.upper,
        }
    }
}

/// Multiplies the death probabilities at `window` by the selected RRs.
///
/// Every other date is copied unchanged; results are capped at 1.
pub fn apply_mortality_shock(
    table: &MortalityTable,
    rr: &MortalityRRTable,
    bound: RrBound,
    window: i32,
) -> Result<MortalityTable> {
    if rr.grid() != table.grid() {
        let missing = table
            .grid()
            .cohorts()
            .iter()
            .find(|c| rr.grid().index_of(**c).is_none())
            .map(|c| c.to_string())
            .unwrap_or_else(|| "(grid layout differs)".into());
        return Err(Error::MissingCohort {
            what: "mortality RR table".into(),
            cohort: missing,
        });
    }
    let Some(at) = table.date_index(window) else {
        return Err(Error::DateOffGrid(window));
    };
    let factors = rr.select(bound);
    let mut rows = table.rows().to_vec();
    for (pd, factor) in rows[at].iter_mut().zip(factors) {
        *pd = (*pd * factor).clamp(0.0, 1.0);
    }
    Ok(table.with_rows(rows))
}

/// One row of study evidence: an RR interval for an age range.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub cohort_lo: u32,
    pub cohort_hi: Option<u32>,
    pub rr_lower: f64,
    pub rr_upper: f64,
    /// Diluted records are population-level studies.
    pub diluted: bool,
    pub source_tag: String,
}

/// How to pick a cohort's interval when the sources do not overlap.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum EnvelopePolicy {
    /// Population-level (already diluted) sources win.
    #[default]
    PopulationLevel,
    /// The named source wins.
    Source(String),
    /// Take the hull of all sources.
    Hull,
}

impl fmt::Display for EnvelopePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvelopePolicy::PopulationLevel => write!(f, "population-level"),
            EnvelopePolicy::Source(tag) => write!(f, "source:{tag}"),
            EnvelopePolicy::Hull => write!(f, "hull"),
        }
    }
}

impl FromStr for EnvelopePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population-level" => Ok(EnvelopePolicy::PopulationLevel),
            "hull" => Ok(EnvelopePolicy::Hull),
            _ => match s.strip_prefix("source:") {
                Some(tag) if !tag.is_empty() => Ok(EnvelopePolicy::Source(tag.to_string())),
                _ => Err(Error::Unresolvable {
                    kind: "envelope policy",
                    id: s.to_string(),
                    valid: vec![
                        "population-level".into(),
                        "hull".into(),
                        "source:<tag>".into(),
                    ],
                }),
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
    population_level: bool,
}

fn intersect<'a>(intervals: impl Iterator<Item = &'a Interval>) -> Option<(f64, f64)> {
    let (lo, hi) = intervals.fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), i| {
        (lo.max(i.lo), hi.min(i.hi))
    });
    (lo <= hi && lo.is_finite()).then_some((lo, hi))
}

/// Builds per-cohort RR bounds from study records.
///
/// Records are diluted first. Within one source the records touching a
/// cohort are merged into their hull; across sources the intervals are
/// intersected. Sources that do not overlap are resolved by `policy`.
pub fn build_rr_envelope(
    records: &[StudyRecord],
    labor: &LaborMarketState,
    grid: &CohortGrid,
    policy: &EnvelopePolicy,
) -> Result<MortalityRRTable> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut normalized = Vec::with_capacity(records.len());
    for r in records {
        check_rr(r.rr_lower)?;
        check_rr(r.rr_upper)?;
        if r.rr_lower > r.rr_upper {
            return Err(Error::InvalidValue(format!(
                "source {}: lower RR {} exceeds upper RR {}",
                r.source_tag, r.rr_lower, r.rr_upper
            )));
        }
        let lo = RelativeRisk {
            value: r.rr_lower,
            diluted: r.diluted,
        }
        .normalized(labor)?;
        let hi = RelativeRisk {
            value: r.rr_upper,
            diluted: r.diluted,
        }
        .normalized(labor)?;
        normalized.push((r, lo.value, hi.value));
    }

    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for cohort in grid.cohorts() {
        let mut by_source: BTreeMap<&str, Interval> = BTreeMap::new();
        for (r, lo, hi) in &normalized {
            if !cohort.overlaps(r.cohort_lo, r.cohort_hi) {
                continue;
            }
            by_source
                .entry(r.source_tag.as_str())
                .and_modify(|i| {
                    i.lo = i.lo.min(*lo);
                    i.hi = i.hi.max(*hi);
                    i.population_level |= r.diluted;
                })
                .or_insert(Interval {
                    lo: *lo,
                    hi: *hi,
                    population_level: r.diluted,
                });
        }
        if by_source.is_empty() {
            return Err(Error::CohortWithoutRecord(cohort.to_string()));
        }
        let (lo, hi) = match intersect(by_source.values()) {
            Some(bounds) => bounds,
            None => resolve_disjoint(*cohort, &by_source, policy)?,
        };
        lower.push(lo);
        upper.push(hi);
    }
    MortalityRRTable::new(grid.clone(), lower, upper)
}

fn resolve_disjoint(
    cohort: Cohort,
    by_source: &BTreeMap<&str, Interval>,
    policy: &EnvelopePolicy,
) -> Result<(f64, f64)> {
    let unresolved = || Error::DisjointIntervals {
        cohort: cohort.to_string(),
        policy: policy.to_string(),
    };
    match policy {
        EnvelopePolicy::PopulationLevel => {
            let mut chosen = by_source.values().filter(|i| i.population_level).peekable();
            if chosen.peek().is_none() {
                return Err(unresolved());
            }
            intersect(chosen).ok_or_else(unresolved)
        }
        EnvelopePolicy::Source(tag) => by_source
            .get(tag.as_str())
            .map(|i| (i.lo, i.hi))
            .ok_or_else(unresolved),
        EnvelopePolicy::Hull => Ok(by_source
            .values()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                (lo.min(i.lo), hi.max(i.hi))
            })),
    }
}

/// Healthcare service types of the expenditure split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Service {
    Hospital,
    Pharmaceutical,
    Specialistic,
    GeneralPractice,
    Rehabilitation,
    Minor,
}

impl Service {
    pub const ALL: [Service; 6] = [
        Service::Hospital,
        Service::Pharmaceutical,
        Service::Specialistic,
        Service::GeneralPractice,
        Service::Rehabilitation,
        Service::Minor,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Service::Hospital => "H",
            Service::Pharmaceutical => "P",
            Service::Specialistic => "S",
            Service::GeneralPractice => "GP",
            Service::Rehabilitation => "R",
            Service::Minor => "m",
        }
    }

    pub fn index(self) -> usize {
        Service::ALL.iter().position(|s| *s == self).unwrap()
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Service {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Service::ALL
            .into_iter()
            .find(|svc| svc.code() == s)
            .ok_or_else(|| Error::Unresolvable {
                kind: "service",
                id: s.to_string(),
                valid: Service::ALL.iter().map(|s| s.code().to_string()).collect(),
            })
    }
}

/// Utilization RR per service type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UtilizationRRSet {
    entries: BTreeMap<Service, RelativeRisk>,
}

impl UtilizationRRSet {
    /// Services without study data (P, R, m) default to a diluted 1.00.
    pub fn new(entries: impl IntoIterator<Item = (Service, RelativeRisk)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for svc in [
            Service::Pharmaceutical,
            Service::Rehabilitation,
            Service::Minor,
        ] {
            map.insert(svc, RelativeRisk::diluted(1.0));
        }
        for (svc, rr) in entries {
            check_rr(rr.value)?;
            map.insert(svc, rr);
        }
        Ok(UtilizationRRSet { entries: map })
    }

    pub fn get(&self, service: Service) -> Option<RelativeRisk> {
        self.entries.get(&service).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Service, RelativeRisk)> + '_ {
        self.entries.iter().map(|(s, r)| (*s, *r))
    }

    /// Every entry in diluted form.
    pub fn normalized(&self, labor: &LaborMarketState) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|(s, r)| Ok((*s, r.normalized(labor)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(UtilizationRRSet { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labor(omega: f64) -> LaborMarketState {
        LaborMarketState::new(omega).unwrap()
    }

    fn dilute(rr: f64, omega: f64) -> f64 {
        dilute_relative_risk(RelativeRisk::undiluted(rr), &labor(omega))
            .unwrap()
            .value
    }

    #[test]
    fn dilution_examples() {
        assert!((dilute(1.20, 0.10) - 1.02).abs() < 1e-12);
        assert!((dilute(2.00, 0.10) - 1.10).abs() < 1e-12);
        assert!((dilute(1.63, 0.10) - 1.063).abs() < 1e-12);
        assert_eq!(dilute(1.00, 0.37), 1.0);
        assert_eq!(dilute(1.7, 0.0), 1.0);
        assert_eq!(dilute(0.1, 1.0), 0.1);
        assert!(
            dilute_relative_risk(RelativeRisk::undiluted(1.2), &labor(0.1))
                .unwrap()
                .diluted
        );
    }

    #[test]
    fn dilution_errors() {
        assert!(matches!(
            dilute_relative_risk(RelativeRisk::undiluted(-0.5), &labor(0.1)),
            Err(Error::NegativeRelativeRisk(_))
        ));
        assert!(matches!(
            LaborMarketState::new(1.2),
            Err(Error::InvalidUnemploymentRate(_))
        ));
        assert!(LaborMarketState::new(-0.01).is_err());
        assert!(matches!(
            dilute_relative_risk(RelativeRisk::diluted(1.1), &labor(0.1)),
            Err(Error::AlreadyDiluted(_))
        ));
    }

    fn small_table() -> MortalityTable {
        MortalityTable::constant(
            CohortGrid::five_year_bands(0, 2),
            vec![2010, 2015, 2020],
            vec![0.04, 0.90],
        )
        .unwrap()
    }

    #[test]
    fn shock_identity() {
        let table = small_table();
        let rr = MortalityRRTable::uniform(table.grid().clone(), 1.0).unwrap();
        let shocked = apply_mortality_shock(&table, &rr, RrBound::Lower, 2015).unwrap();
        assert_eq!(shocked, table);
    }

    #[test]
    fn shock_hits_window_only_and_clamps() {
        let table = small_table();
        let rr = MortalityRRTable::new(table.grid().clone(), vec![1.25, 1.30], vec![1.25, 1.30])
            .unwrap();
        let shocked = apply_mortality_shock(&table, &rr, RrBound::Upper, 2015).unwrap();

        // Element-wise re-computation.
        for (t, date) in table.dates().iter().enumerate() {
            for a in 0..2 {
                let base = table.rows()[t][a];
                let expected = if *date == 2015 {
                    (base * rr.upper()[a]).min(1.0)
                } else {
                    base
                };
                assert_eq!(shocked.rows()[t][a], expected);
            }
        }
        assert!((shocked.at(2015).unwrap()[0] - 0.05).abs() < 1e-15);
        assert_eq!(shocked.at(2020).unwrap()[0], 0.04);
        assert_eq!(shocked.at(2015).unwrap()[1], 1.0);
    }

    #[test]
    fn shock_errors() {
        let table = small_table();
        let rr = MortalityRRTable::uniform(CohortGrid::five_year_bands(0, 3), 1.1).unwrap();
        assert!(matches!(
            apply_mortality_shock(&table, &rr, RrBound::Lower, 2015),
            Err(Error::MissingCohort { .. })
        ));
        let rr = MortalityRRTable::uniform(table.grid().clone(), 1.1).unwrap();
        assert!(matches!(
            apply_mortality_shock(&table, &rr, RrBound::Lower, 2017),
            Err(Error::DateOffGrid(2017))
        ));
    }

    fn record(lo: u32, hi: Option<u32>, l: f64, u: f64, diluted: bool, tag: &str) -> StudyRecord {
        StudyRecord {
            cohort_lo: lo,
            cohort_hi: hi,
            rr_lower: l,
            rr_upper: u,
            diluted,
            source_tag: tag.into(),
        }
    }

    #[test]
    fn singleton_envelope() {
        let grid = CohortGrid::five_year_bands(40, 1);
        let env = build_rr_envelope(
            &[record(40, Some(44), 1.05, 1.05, true, "a")],
            &labor(0.1),
            &grid,
            &EnvelopePolicy::default(),
        )
        .unwrap();
        assert_eq!(env.lower(), &[1.05]);
        assert_eq!(env.upper(), &[1.05]);
    }

    #[test]
    fn overlapping_intervals_intersect() {
        let grid = CohortGrid::five_year_bands(40, 1);
        let env = build_rr_envelope(
            &[
                record(40, Some(44), 1.02, 1.08, true, "a"),
                record(40, None, 1.05, 1.12, true, "b"),
            ],
            &labor(0.1),
            &grid,
            &EnvelopePolicy::default(),
        )
        .unwrap();
        assert_eq!((env.lower()[0], env.upper()[0]), (1.05, 1.08));
    }

    #[test]
    fn disjoint_policy_table() {
        let grid = CohortGrid::five_year_bands(40, 1);
        // Cohort study diluted from [1.20, 1.40] to [1.02, 1.04].
        let records = [
            record(40, Some(44), 1.20, 1.40, false, "cohort"),
            record(40, Some(44), 1.06, 1.09, true, "russia"),
        ];
        let cases: [(EnvelopePolicy, Option<(f64, f64)>); 4] = [
            (EnvelopePolicy::PopulationLevel, Some((1.06, 1.09))),
            (EnvelopePolicy::Source("cohort".into()), Some((1.02, 1.04))),
            (EnvelopePolicy::Hull, Some((1.02, 1.09))),
            (EnvelopePolicy::Source("missing".into()), None),
        ];
        for (policy, expected) in cases {
            let got = build_rr_envelope(&records, &labor(0.1), &grid, &policy);
            match expected {
                Some((lo, hi)) => {
                    let env = got.unwrap();
                    assert!((env.lower()[0] - lo).abs() < 1e-12, "{policy}");
                    assert!((env.upper()[0] - hi).abs() < 1e-12, "{policy}");
                }
                None => assert!(matches!(got, Err(Error::DisjointIntervals { .. }))),
            }
        }

        // Without a population-level source the default policy gives up.
        let records = [
            record(40, Some(44), 1.02, 1.03, true, "a"),
            record(40, Some(44), 1.20, 1.40, false, "b"),
        ];
        let records: Vec<_> = records
            .into_iter()
            .map(|mut r| {
                r.diluted = false;
                r
            })
            .collect();
        assert!(matches!(
            build_rr_envelope(&records, &labor(0.1), &grid, &EnvelopePolicy::default()),
            Err(Error::DisjointIntervals { .. })
        ));
    }

    #[test]
    fn envelope_errors() {
        let grid = CohortGrid::five_year_bands(0, 3);
        assert!(matches!(
            build_rr_envelope(&[], &labor(0.1), &grid, &EnvelopePolicy::default()),
            Err(Error::EmptyRecords)
        ));
        assert!(matches!(
            build_rr_envelope(
                &[record(0, Some(4), 1.0, 1.0, true, "a")],
                &labor(0.1),
                &grid,
                &EnvelopePolicy::default()
            ),
            Err(Error::CohortWithoutRecord(c)) if c == "5-9"
        ));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            "population-level".parse::<EnvelopePolicy>().unwrap(),
            EnvelopePolicy::PopulationLevel
        );
        assert_eq!(
            "source:russia".parse::<EnvelopePolicy>().unwrap(),
            EnvelopePolicy::Source("russia".into())
        );
        assert!("best".parse::<EnvelopePolicy>().is_err());
    }

    #[test]
    fn utilization_defaults() {
        let set =
            UtilizationRRSet::new([(Service::Hospital, RelativeRisk::undiluted(1.33))]).unwrap();
        assert_eq!(set.get(Service::Minor), Some(RelativeRisk::diluted(1.0)));
        assert_eq!(set.get(Service::Specialistic), None);
        let diluted = set.normalized(&labor(0.1)).unwrap();
        assert!((diluted.get(Service::Hospital).unwrap().value - 1.033).abs() < 1e-12);
        assert_eq!("GP".parse::<Service>().unwrap(), Service::GeneralPractice);
        assert!("X".parse::<Service>().is_err());
    }
}
