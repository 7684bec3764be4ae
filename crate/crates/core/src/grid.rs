//! Age-cohort axis and projection-date axis.
//!
//! Every table in the engine is indexed by the same [`CohortGrid`]: a list of
//! contiguous, ascending age bands whose last band is open-ended. Projection
//! dates advance in fixed steps of [`STEP_YEARS`].

use std::fmt;

use crate::error::{Error, Result};

/// Spacing between projection dates, and the width of a standard cohort.
pub const STEP_YEARS: i32 = 5;

/// An age band. `hi` is inclusive; `None` marks the open-ended top band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cohort {
    pub lo: u32,
    pub hi: Option<u32>,
}

impl Cohort {
    pub fn closed(lo: u32, hi: u32) -> Self {
        Cohort { lo, hi: Some(hi) }
    }

    pub fn open(lo: u32) -> Self {
        Cohort { lo, hi: None }
    }

    pub fn is_open(&self) -> bool {
        self.hi.is_none()
    }

    /// True when the two age ranges share at least one year of age.
    pub fn overlaps(&self, lo: u32, hi: Option<u32>) -> bool {
        let self_hi = self.hi.unwrap_or(u32::MAX);
        let other_hi = hi.unwrap_or(u32::MAX);
        self.lo <= other_hi && lo <= self_hi
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(hi) => write!(f, "{}-{}", self.lo, hi),
            None => write!(f, "{}+", self.lo),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortGrid {
    cohorts: Vec<Cohort>,
}

impl CohortGrid {
    /// The standard 20-band grid: 0-4, 5-9, ..., 90-94, 95+.
    pub fn five_year() -> Self {
        Self::five_year_bands(0, 20)
    }

    /// `count` five-year bands starting at age `first`, the last one open.
    pub fn five_year_bands(first: u32, count: usize) -> Self {
        assert!(count > 0, "a grid needs at least one cohort");
        let width = STEP_YEARS as u32;
        let cohorts = (0..count)
            .map(|i| {
                let lo = first + width * i as u32;
                if i + 1 == count {
                    Cohort::open(lo)
                } else {
                    Cohort::closed(lo, lo + width - 1)
                }
            })
            .collect();
        CohortGrid { cohorts }
    }

    pub fn from_cohorts(cohorts: Vec<Cohort>) -> Result<Self> {
        let Some(last) = cohorts.last() else {
            return Err(Error::InvalidGrid("no cohorts".into()));
        };
        if !last.is_open() {
            return Err(Error::InvalidGrid(format!(
                "last cohort {last} must be open-ended"
            )));
        }
        for pair in cohorts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let Some(hi) = a.hi else {
                return Err(Error::InvalidGrid(format!(
                    "open-ended cohort {a} is not the last one"
                )));
            };
            if hi < a.lo {
                return Err(Error::InvalidGrid(format!("cohort {a} is empty")));
            }
            if b.lo != hi + 1 {
                return Err(Error::InvalidGrid(format!(
                    "cohorts {a} and {b} are not contiguous"
                )));
            }
        }
        Ok(CohortGrid { cohorts })
    }

    pub fn len(&self) -> usize {
        self.cohorts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cohorts.is_empty()
    }

    pub fn cohorts(&self) -> &[Cohort] {
        &self.cohorts
    }

    pub fn index_of(&self, cohort: Cohort) -> Option<usize> {
        self.cohorts.iter().position(|c| *c == cohort)
    }

    /// Representative age of each cohort. The open top band uses half the
    /// width of the band below it (or half a standard step when alone).
    pub fn midpoints(&self) -> Vec<f64> {
        let mut prev_width = STEP_YEARS as f64;
        self.cohorts
            .iter()
            .map(|c| match c.hi {
                Some(hi) => {
                    prev_width = (hi - c.lo + 1) as f64;
                    c.lo as f64 + prev_width / 2.0
                }
                None => c.lo as f64 + prev_width / 2.0,
            })
            .collect()
    }

    /// Fails with [`Error::GridMismatch`] naming `what` when the grids differ.
    pub fn ensure_same(&self, other: &CohortGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: expected {} cohorts ({}..{}), found {} ({}..{})",
                self.len(),
                self.cohorts[0],
                self.cohorts[self.len() - 1],
                other.len(),
                other.cohorts[0],
                other.cohorts[other.len() - 1],
            )))
        }
    }
}

impl Default for CohortGrid {
    fn default() -> Self {
        Self::five_year()
    }
}

/// Checks that `dates` ascend in exact 5-year steps with no gaps.
pub fn check_date_axis(dates: &[i32]) -> Result<()> {
    if dates.is_empty() {
        return Err(Error::InvalidValue("empty date axis".into()));
    }
    for pair in dates.windows(2) {
        if pair[1] - pair[0] != STEP_YEARS {
            return Err(Error::DateOffGrid(pair[1]));
        }
    }
    Ok(())
}

/// Dates from `start` to `end` inclusive in 5-year steps.
pub fn date_range(start: i32, end: i32) -> Result<Vec<i32>> {
    if end < start || (end - start) % STEP_YEARS != 0 {
        return Err(Error::HorizonOffGrid {
            start,
            horizon: end,
        });
    }
    Ok((start..=end).step_by(STEP_YEARS as usize).collect())
}
