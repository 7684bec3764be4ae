use std::path::PathBuf;

use thiserror::Error;

use crate::rr::Service;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unemployment rate {0} outside [0, 1]")]
    InvalidUnemploymentRate(f64),

    #[error("relative risk must be a finite non-negative number, got {0}")]
    NegativeRelativeRisk(f64),

    #[error("relative risk {0} is already diluted")]
    AlreadyDiluted(f64),

    #[error("relative risk for service {0} is not diluted; normalize it before computing RF")]
    UndilutedRisk(Service),

    #[error("invalid cohort grid: {0}")]
    InvalidGrid(String),

    #[error("cohort grids differ: {0}")]
    GridMismatch(String),

    #[error("missing cohort {cohort} in {what}")]
    MissingCohort { what: String, cohort: String },

    #[error("date {0} is not on the projection grid")]
    DateOffGrid(i32),

    #[error("horizon {horizon} is not reachable from {start} in 5-year steps")]
    HorizonOffGrid { start: i32, horizon: i32 },

    #[error("mortality table has no entry for date {0}")]
    MortalityCoverage(i32),

    #[error("no study records supplied")]
    EmptyRecords,

    #[error("no study record covers cohort {0}")]
    CohortWithoutRecord(String),

    #[error("disjoint relative-risk intervals for cohort {cohort} and the {policy} policy cannot resolve them")]
    DisjointIntervals { cohort: String, policy: String },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("health improvement rate must be non-negative, got {0}")]
    NegativeImprovementRate(f64),

    #[error("degenerate survivor/decedent split for cohort {cohort}: denominator {denominator}")]
    DegenerateDenominator { cohort: String, denominator: f64 },

    #[error("utilization relative risks missing service {0}")]
    IncompleteRrSet(Service),

    #[error("invalid expenditure shares: {0}")]
    InvalidShares(String),

    #[error("rescaling factor must be non-negative, got {0}")]
    NegativeRescalingFactor(f64),

    #[error("unknown {kind} '{id}'; valid: {}", valid.join(", "))]
    Unresolvable {
        kind: &'static str,
        id: String,
        valid: Vec<String>,
    },

    #[error("sensitivity axis '{0}' is empty")]
    EmptyAxis(&'static str),

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("{}:{line}: {message}", path.display())]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}:{line}: negative count {value}", path.display())]
    NegativeCount {
        path: PathBuf,
        line: u64,
        value: f64,
    },

    #[error("{}: scenario '{scenario}' is missing date {date}", path.display())]
    DateGap {
        path: PathBuf,
        scenario: String,
        date: i32,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Errors raised by the numerics themselves rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDenominator { .. } | Error::NonFinite(_)
        )
    }
}
