//! Run manifests: flat `key = value` files with dotted keys.
//!
//! ```text
//! # inputs, relative to the manifest's directory
//! input.population = population.csv
//! input.mortality  = mortality.csv
//! scenario.model   = DC
//! sensitivity.models = CH, DC
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hce_core::grid::STEP_YEARS;
use hce_core::io;
use hce_core::{
    project_population, BirthRateScenario, EnvelopePolicy, LaborMarketState, Model,
    ModelParameters, MortalityRrSelector, MortalityRrSource, PopulationPath, ScenarioConfig,
    ScenarioInputs, SensitivityAxes, UtilizationSelector,
};

use crate::error::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "input.population",
    "input.mortality",
    "input.rr_mortality",
    "input.rr_utilization.lower",
    "input.rr_utilization.upper",
    "input.cost_profile",
    "input.ds_ratio",
    "input.shares",
    "input.gdp",
    "output.dir",
    "output.format",
    "scenario.population",
    "scenario.model",
    "scenario.cost_profile",
    "scenario.ds",
    "scenario.rr_mortality",
    "scenario.rr_utilization",
    "scenario.shock_date",
    "scenario.unemployment_rate",
    "scenario.envelope_policy",
    "params.health_improvement_rate",
    "params.base_date",
    "project.initial",
    "project.horizon",
    "project.scenarios",
    "sensitivity.models",
    "sensitivity.populations",
    "sensitivity.rr_mortality",
    "sensitivity.rr_utilization",
    "report.inputs",
];

const DEFAULT_UNEMPLOYMENT_RATE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            _ => Err(format!("unknown format '{s}'; valid: csv, table")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    path: PathBuf,
    base_dir: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

/// A simulated population scenario: name and crude birth rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedScenario {
    pub name: String,
    pub birth_rate: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, CliError> {
        let err = |line: usize, message: String| CliError::Manifest {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(
                    line_no,
                    format!("expected 'key = value', got '{line}'"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(err(line_no, format!("unknown key '{key}'")));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value.to_string()))
            {
                return Err(err(line_no, format!("'{key}' already set on line {first}")));
            }
        }
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(RunManifest {
            path: path.to_path_buf(),
            base_dir,
            entries,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn err(&self, key: &str, message: String) -> CliError {
        CliError::Manifest {
            path: self.path.clone(),
            line: self.entries.get(key).map(|(l, _)| *l).unwrap_or(0),
            message,
        }
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| self.err(key, format!("missing required key '{key}'")))
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|e| self.err(key, format!("{key}: {e}"))),
        }
    }

    fn list(&self, key: &str) -> Vec<&str> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }

    fn parsed_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.list(key)
            .into_iter()
            .map(|s| s.parse().map_err(|e| self.err(key, format!("{key}: {e}"))))
            .collect()
    }

    /// Resolves a path-valued key against the manifest directory and checks
    /// that the file exists.
    pub fn input_path(&self, key: &str) -> Result<PathBuf, CliError> {
        let path = self.resolve(self.require(key)?);
        if !path.is_file() {
            return Err(self.err(key, format!("{key}: file not found: {}", path.display())));
        }
        Ok(path)
    }

    fn resolve(&self, raw: &str) -> PathBuf {
        let p = Path::new(raw);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self, cli_override: Option<&Path>) -> PathBuf {
        match cli_override {
            Some(p) => p.to_path_buf(),
            None => self.resolve(self.get("output.dir").unwrap_or("out")),
        }
    }

    pub fn format(&self, cli_override: Option<Format>) -> Result<Format, CliError> {
        match cli_override {
            Some(f) => Ok(f),
            None => self.parsed("output.format", Format::Csv),
        }
    }

    pub fn report_inputs(&self) -> Result<Vec<PathBuf>, CliError> {
        let list = self.list("report.inputs");
        if list.is_empty() {
            return Err(self.err("report.inputs", "report.inputs lists no files".into()));
        }
        list.into_iter()
            .map(|raw| {
                let p = self.resolve(raw);
                if p.is_file() {
                    Ok(p)
                } else {
                    Err(self.err(
                        "report.inputs",
                        format!("report.inputs: file not found: {}", p.display()),
                    ))
                }
            })
            .collect()
    }

    pub fn params(&self) -> Result<ModelParameters, CliError> {
        let defaults = ModelParameters::default();
        Ok(ModelParameters {
            health_improvement_rate: self.parsed(
                "params.health_improvement_rate",
                defaults.health_improvement_rate,
            )?,
            base_date: self.parsed("params.base_date", defaults.base_date)?,
            ..defaults
        })
    }

    /// Initial population reference `SCENARIO@DATE`.
    pub fn project_initial(&self) -> Result<(String, i32), CliError> {
        let raw = self.require("project.initial")?;
        let (name, date) = raw.split_once('@').ok_or_else(|| {
            self.err(
                "project.initial",
                format!("expected SCENARIO@DATE, got '{raw}'"),
            )
        })?;
        let date = date
            .trim()
            .parse()
            .map_err(|_| self.err("project.initial", format!("bad date in '{raw}'")))?;
        Ok((name.trim().to_string(), date))
    }

    pub fn project_horizon(&self) -> Result<i32, CliError> {
        let raw = self.require("project.horizon")?;
        raw.parse()
            .map_err(|_| self.err("project.horizon", format!("bad horizon '{raw}'")))
    }

    /// `project.scenarios = NAME:RATE, NAME:RATE`.
    pub fn simulated_scenarios(&self) -> Result<Vec<SimulatedScenario>, CliError> {
        self.list("project.scenarios")
            .into_iter()
            .map(|item| {
                let bad = || {
                    self.err(
                        "project.scenarios",
                        format!("expected NAME:BIRTH_RATE, got '{item}'"),
                    )
                };
                let (name, rate) = item.split_once(':').ok_or_else(bad)?;
                let birth_rate: f64 = rate.trim().parse().map_err(|_| bad())?;
                Ok(SimulatedScenario {
                    name: name.trim().to_string(),
                    birth_rate,
                })
            })
            .collect()
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig, CliError> {
        let model: Model = self
            .require("scenario.model")?
            .parse()
            .map_err(|e: hce_core::Error| self.err("scenario.model", e.to_string()))?;
        let omega: f64 = self.parsed("scenario.unemployment_rate", DEFAULT_UNEMPLOYMENT_RATE)?;
        let labor = LaborMarketState::new(omega)
            .map_err(|e| self.err("scenario.unemployment_rate", e.to_string()))?;
        let shock_date: i32 =
            self.parsed("scenario.shock_date", hce_core::impact::DEFAULT_SHOCK_DATE)?;
        if shock_date % STEP_YEARS != 0 {
            return Err(self.err(
                "scenario.shock_date",
                format!("shock date {shock_date} is not on the 5-year grid"),
            ));
        }
        Ok(ScenarioConfig {
            population: self.require("scenario.population")?.to_string(),
            model,
            cost_profile: self.require("scenario.cost_profile")?.to_string(),
            ds_scenario: self.require("scenario.ds")?.to_string(),
            mortality_rr: self.parsed("scenario.rr_mortality", MortalityRrSelector::Lower)?,
            utilization: self.parsed("scenario.rr_utilization", UtilizationSelector::Lower)?,
            shock_date,
            labor,
        })
    }

    /// Sensitivity axes; a missing axis falls back to the base scenario value.
    pub fn sensitivity_axes(&self, base: &ScenarioConfig) -> Result<SensitivityAxes, CliError> {
        let mut axes = SensitivityAxes {
            models: self.parsed_list("sensitivity.models")?,
            populations: self
                .list("sensitivity.populations")
                .into_iter()
                .map(str::to_string)
                .collect(),
            mortality_rr: self.parsed_list("sensitivity.rr_mortality")?,
            utilization: self.parsed_list("sensitivity.rr_utilization")?,
        };
        if axes.models.is_empty() {
            axes.models.push(base.model);
        }
        if axes.populations.is_empty() {
            axes.populations.push(base.population.clone());
        }
        if axes.mortality_rr.is_empty() {
            axes.mortality_rr.push(base.mortality_rr);
        }
        if axes.utilization.is_empty() {
            axes.utilization.push(base.utilization);
        }
        Ok(axes)
    }

    /// Loads and validates every input the impact commands need, then adds
    /// the simulated population scenarios.
    pub fn scenario_inputs(&self) -> Result<ScenarioInputs, CliError> {
        let population = self.input_path("input.population")?;
        let mortality = self.input_path("input.mortality")?;
        let rr_mortality = self.input_path("input.rr_mortality")?;
        let util_lower = self.input_path("input.rr_utilization.lower")?;
        let util_upper = self.input_path("input.rr_utilization.upper")?;
        let cost_profile = self.input_path("input.cost_profile")?;
        let ds_ratio = self.input_path("input.ds_ratio")?;
        let shares = self.input_path("input.shares")?;
        let gdp = self.input_path("input.gdp")?;
        let policy: EnvelopePolicy =
            self.parsed("scenario.envelope_policy", EnvelopePolicy::default())?;

        let mut populations = io::read_population_csv(&population)?;
        let mortality = io::read_mortality_csv(&mortality)?;
        let records = io::read_rr_mortality_csv(&rr_mortality)?;
        let utilization_lower = io::read_rr_utilization_csv(&util_lower)?;
        let utilization_upper = io::read_rr_utilization_csv(&util_upper)?;
        let cost_profiles = io::read_cost_profiles_csv(&cost_profile)?;
        let ds_profiles = io::read_ds_ratio_csv(&ds_ratio)?;
        let shares = io::read_shares_csv(&shares)?;
        let gdp = io::read_gdp_csv(&gdp)?;
        let params = ModelParameters {
            gdp: Some(gdp.clone()),
            ..self.params()?
        };

        let simulated = self.simulated_scenarios()?;
        if !simulated.is_empty() {
            for path in self.simulate(&populations, &mortality, &simulated)? {
                populations.insert(path.scenario.clone(), path);
            }
        }
        Ok(ScenarioInputs {
            populations,
            mortality,
            cost_profiles,
            ds_profiles,
            mortality_rr: MortalityRrSource::Records { records, policy },
            utilization_lower,
            utilization_upper,
            shares,
            gdp,
            params,
        })
    }

    /// Runs the cohort-component projection for each simulated scenario.
    pub fn simulate(
        &self,
        exogenous: &BTreeMap<String, PopulationPath>,
        mortality: &hce_core::MortalityTable,
        scenarios: &[SimulatedScenario],
    ) -> Result<Vec<PopulationPath>, CliError> {
        let (initial_name, initial_date) = self.project_initial()?;
        let horizon = self.project_horizon()?;
        let source = exogenous.get(&initial_name).ok_or_else(|| {
            self.err(
                "project.initial",
                format!(
                    "unknown population scenario '{initial_name}'; valid: {}",
                    exogenous.keys().cloned().collect::<Vec<_>>().join(", ")
                ),
            )
        })?;
        let snapshot = source.snapshot(initial_date)?;
        scenarios
            .iter()
            .map(|s| {
                let births = BirthRateScenario::new(s.birth_rate)
                    .map_err(|e| self.err("project.scenarios", e.to_string()))?;
                Ok(project_population(
                    s.name.clone(),
                    &snapshot,
                    mortality,
                    births,
                    horizon,
                )?)
            })
            .collect()
    }

    /// Echo of the effective scenario configuration, one `key = value` per line.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (key, (_, value)) in &self.entries {
            if key.starts_with("scenario.")
                || key.starts_with("params.")
                || key.starts_with("sensitivity.")
            {
                out.push_str(&format!("{key} = {value}\n"));
            }
        }
        out
    }
}
