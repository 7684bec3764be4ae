//! Differential projection engine for crisis-related public healthcare
//! expenditure.
//!
//! The crate is organised along the computation:
//!
//! * [`rr`]: relative risks, their dilution by the unemployment rate, the
//!   mortality shock operator and RR envelopes built from study records.
//! * [`population`]: population paths, mortality tables and the
//!   cohort-component projection.
//! * [`expenditure`]: the PD, CH and DC expenditure models, the
//!   survivor/decedent cost split and the service-mix rescaling factor.
//! * [`impact`]: CRIMI, CRIUI and CRI against a base scenario, and the
//!   sensitivity grid.
//! * [`io`]: delimited-text readers and writers for every file schema.
//!
//! All computations are pure functions over immutable inputs.

pub mod error;
pub mod expenditure;
pub mod grid;
pub mod impact;
pub mod io;
pub mod population;
pub mod rr;
pub mod units;

pub use error::{Error, Result};
pub use expenditure::{
    decompose_costs, evaluate_at, expenditure_ch, expenditure_dc, expenditure_dc_with_base,
    expenditure_pd, rescaling_factor, CostProfile, CostSplit, DSRatioProfile, ExpenditurePath,
    ExpenditureShares, GdpPath, Model, ModelInputs, ModelParameters,
};
pub use grid::{Cohort, CohortGrid, STEP_YEARS};
pub use impact::{
    cri, crimi, criui, sensitivity_grid, ImpactResult, MortalityRrSelector, MortalityRrSource,
    ScenarioConfig, ScenarioInputs, SensitivityAxes, SensitivityRow, UtilizationSelector,
};
pub use population::{
    project_population, BirthRateScenario, MortalityTable, PopulationPath, PopulationSnapshot,
};
pub use rr::{
    apply_mortality_shock, build_rr_envelope, dilute_relative_risk, EnvelopePolicy,
    LaborMarketState, MortalityRRTable, RelativeRisk, RrBound, Service, StudyRecord,
    UtilizationRRSet,
};
