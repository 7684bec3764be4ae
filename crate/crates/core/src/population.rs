//! Population paths, mortality tables and the cohort-component projection.

use crate::error::{Error, Result};
use crate::grid::{check_date_axis, CohortGrid, STEP_YEARS};

/// The four exogenous scenarios that are read from data rather than simulated.
pub const EXOGENOUS_SCENARIOS: [&str; 4] = ["PopMV", "PopHV", "PopLV", "PopCFV"];

/// Head-counts in thousands of persons, one row per projection date.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationPath {
    pub scenario: String,
    grid: CohortGrid,
    dates: Vec<i32>,
    counts: Vec<Vec<f64>>,
}

impl PopulationPath {
    pub fn new(
        scenario: impl Into<String>,
        grid: CohortGrid,
        dates: Vec<i32>,
        counts: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_date_axis(&dates)?;
        if counts.len() != dates.len() {
            return Err(Error::InvalidValue(format!(
                "{} count rows for {} dates",
                counts.len(),
                dates.len()
            )));
        }
        for (row, date) in counts.iter().zip(&dates) {
            if row.len() != grid.len() {
                return Err(Error::InvalidValue(format!(
                    "date {date}: {} counts for {} cohorts",
                    row.len(),
                    grid.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidValue(format!(
                    "date {date}: head-count {bad} is not a non-negative number"
                )));
            }
        }
        Ok(PopulationPath {
            scenario: scenario.into(),
            grid,
            dates,
            counts,
        })
    }

    pub fn grid(&self) -> &CohortGrid {
        &self.grid
    }

    pub fn dates(&self) -> &[i32] {
        &self.dates
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.counts
    }

    pub fn at(&self, date: i32) -> Result<&[f64]> {
        self.dates
            .iter()
            .position(|d| *d == date)
            .map(|i| self.counts[i].as_slice())
            .ok_or(Error::DateOffGrid(date))
    }

    pub fn total(&self, date: i32) -> Result<f64> {
        Ok(self.at(date)?.iter().sum())
    }

    pub fn snapshot(&self, date: i32) -> Result<PopulationSnapshot> {
        Ok(PopulationSnapshot {
            grid: self.grid.clone(),
            date,
            counts: self.at(date)?.to_vec(),
        })
    }

    /// Multiplies every head-count by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let counts = self
            .counts
            .iter()
            .map(|row| row.iter().map(|v| v * factor).collect())
            .collect();
        Self::new(
            self.scenario.clone(),
            self.grid.clone(),
            self.dates.clone(),
            counts,
        )
    }
}

/// A population at a single date, the starting point of a projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSnapshot {
    pub grid: CohortGrid,
    pub date: i32,
    pub counts: Vec<f64>,
}

/// Five-year death probabilities per cohort and date.
#[derive(Debug, Clone, PartialEq)]
pub struct MortalityTable {
    grid: CohortGrid,
    dates: Vec<i32>,
    pd: Vec<Vec<f64>>,
    life_expectancy: Option<Vec<Vec<f64>>>,
}

impl MortalityTable {
    pub fn new(grid: CohortGrid, dates: Vec<i32>, pd: Vec<Vec<f64>>) -> Result<Self> {
        check_date_axis(&dates)?;
        if pd.len() != dates.len() {
            return Err(Error::InvalidValue(format!(
                "{} mortality rows for {} dates",
                pd.len(),
                dates.len()
            )));
        }
        for (row, date) in pd.iter().zip(&dates) {
            if row.len() != grid.len() {
                return Err(Error::InvalidValue(format!(
                    "date {date}: {} death probabilities for {} cohorts",
                    row.len(),
                    grid.len()
                )));
            }
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidValue(format!(
                    "date {date}: death probability {bad} outside [0, 1]"
                )));
            }
        }
        Ok(MortalityTable {
            grid,
            dates,
            pd,
            life_expectancy: None,
        })
    }

    /// Attaches the informational life-expectancy column.
    pub fn with_life_expectancy(mut self, le: Vec<Vec<f64>>) -> Result<Self> {
        if le.len() != self.dates.len() || le.iter().any(|r| r.len() != self.grid.len()) {
            return Err(Error::InvalidValue(
                "life-expectancy table does not match the mortality table shape".into(),
            ));
        }
        self.life_expectancy = Some(le);
        Ok(self)
    }

    /// A table with the same death probabilities at every date.
    pub fn constant(grid: CohortGrid, dates: Vec<i32>, pd: Vec<f64>) -> Result<Self> {
        let rows = vec![pd; dates.len()];
        Self::new(grid, dates, rows)
    }

    pub fn grid(&self) -> &CohortGrid {
        &self.grid
    }

    pub fn dates(&self) -> &[i32] {
        &self.dates
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.pd
    }

    pub fn life_expectancy(&self) -> Option<&[Vec<f64>]> {
        self.life_expectancy.as_deref()
    }

    pub fn date_index(&self, date: i32) -> Option<usize> {
        self.dates.iter().position(|d| *d == date)
    }

    pub fn at(&self, date: i32) -> Result<&[f64]> {
        self.date_index(date)
            .map(|i| self.pd[i].as_slice())
            .ok_or(Error::MortalityCoverage(date))
    }

    /// Same shape, new probabilities. Used by the shock operator.
    pub(crate) fn with_rows(&self, pd: Vec<Vec<f64>>) -> Self {
        MortalityTable {
            grid: self.grid.clone(),
            dates: self.dates.clone(),
            pd,
            life_expectancy: self.life_expectancy.clone(),
        }
    }
}

/// Crude birth rate: annual births as a fraction of the total population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthRateScenario {
    rate: f64,
}

impl BirthRateScenario {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "crude birth rate must be non-negative, got {rate}"
            )));
        }
        Ok(BirthRateScenario { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Births over one projection step for a population of `total`.
    pub fn births_per_step(&self, total: f64) -> f64 {
        self.rate * total * STEP_YEARS as f64
    }
}

/// Advances a population by one 5-year step.
///
/// Cohort `a` at `t` survives into cohort `a + 1` at `t + 5`; the open top
/// cohort keeps its own survivors as well. Newborns enter the first cohort
/// without in-step mortality.
pub fn step_population(counts: &[f64], pd: &[f64], births: BirthRateScenario) -> Vec<f64> {
    debug_assert_eq!(counts.len(), pd.len());
    let n = counts.len();
    let total: f64 = counts.iter().sum();
    let survivors: Vec<f64> = counts
        .iter()
        .zip(pd)
        .map(|(count, p)| count * (1.0 - p))
        .collect();

    let mut next = vec![0.0; n];
    next[1..n].copy_from_slice(&survivors[..n - 1]);
    next[n - 1] += survivors[n - 1];
    next[0] += births.births_per_step(total);
    next
}

/// Cohort-component projection from `initial` through `horizon`.
///
/// No migration. Mortality must cover every step start from the initial
/// date up to `horizon - 5`.
pub fn project_population(
    scenario: impl Into<String>,
    initial: &PopulationSnapshot,
    mortality: &MortalityTable,
    births: BirthRateScenario,
    horizon: i32,
) -> Result<PopulationPath> {
    let dates = crate::grid::date_range(initial.date, horizon)?;
    initial
        .grid
        .ensure_same(mortality.grid(), "mortality table")?;
    if initial.counts.len() != initial.grid.len() {
        return Err(Error::InvalidValue(format!(
            "initial population has {} counts for {} cohorts",
            initial.counts.len(),
            initial.grid.len()
        )));
    }
    // Check coverage up front so a gap never yields a partial path.
    for date in &dates[..dates.len() - 1] {
        mortality.at(*date)?;
    }

    let mut rows = Vec::with_capacity(dates.len());
    rows.push(initial.counts.clone());
    for date in &dates[..dates.len() - 1] {
        let next = step_population(rows.last().unwrap(), mortality.at(*date)?, births);
        rows.push(next);
    }
    PopulationPath::new(scenario, initial.grid.clone(), dates, rows)
}
