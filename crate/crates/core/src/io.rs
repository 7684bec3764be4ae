//! Delimited-text readers and writers.
//!
//! Input schemas (one header row, `#` comments allowed):
//!
//! | file                | columns                                                          |
//! |---------------------|------------------------------------------------------------------|
//! | `population.csv`    | scenario, date, cohort_lo, cohort_hi, count_thousands            |
//! | `mortality.csv`     | date, cohort_lo, cohort_hi, pd_5yr, life_expectancy (optional)   |
//! | `rr_mortality.csv`  | cohort_lo, cohort_hi, rr_lower, rr_upper, diluted, source_tag    |
//! | `rr_utilization.csv`| service, rr, diluted                                             |
//! | `cost_profile.csv`  | profile_id, cohort_lo, cohort_hi, eur_per_capita                 |
//! | `ds_ratio.csv`      | scenario, cohort_lo, cohort_hi, ratio                            |
//! | `shares.csv`        | service, fraction                                                |
//! | `gdp.csv`           | date, eur_millions                                               |
//!
//! An empty `cohort_hi` (or `+`) marks the open-ended top cohort. Output
//! numbers carry six significant digits.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use csv::{StringRecord, Terminator, Trim};

use crate::error::{Error, Result};
use crate::expenditure::{
    CostProfile, DSRatioProfile, ExpenditurePath, ExpenditureShares, GdpPath, Model,
};
use crate::grid::{Cohort, CohortGrid, STEP_YEARS};
use crate::impact::{ImpactResult, SensitivityRow};
use crate::population::{MortalityTable, PopulationPath, EXOGENOUS_SCENARIOS};
use crate::rr::{RelativeRisk, Service, StudyRecord, UtilizationRRSet};
use crate::units;

pub const SENSITIVITY_COLUMNS: [&str; 8] = [
    "model",
    "pop_scenario",
    "rr_selector",
    "rf",
    "crimi_eur_m",
    "criui_eur_m",
    "cri_eur_m",
    "cri_gdp_pct",
];
pub const IMPACT_COLUMNS: [&str; 3] = ["component", "eur_m", "gdp_pct"];
pub const EXPENDITURE_COLUMNS: [&str; 4] = ["model", "date", "eur_m", "gdp_pct"];
pub const POPULATION_COLUMNS: [&str; 5] = [
    "scenario",
    "date",
    "cohort_lo",
    "cohort_hi",
    "count_thousands",
];

/// Formats `x` with six significant digits, e.g. `456.104`, `1.02715`.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("scientific formatting has an exponent");
    let rounded: f64 = sci.parse().expect("scientific formatting re-parses");
    let decimals = (5 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// A parsed delimited file with line numbers kept for diagnostics.
struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Table> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(Trim::All)
            .comment(Some(b'#'))
            .from_reader(file);
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let headers: Vec<String> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let table_err = |message: String| Error::Schema {
            path: path.to_path_buf(),
            line: 1,
            message,
        };
        for col in required {
            if !headers.iter().any(|h| h == col) {
                return Err(table_err(format!(
                    "missing column '{col}' (found: {})",
                    headers.join(", ")
                )));
            }
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Table {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn schema_err(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn text<'r>(&self, line: u64, rec: &'r StringRecord, name: &str) -> Result<&'r str> {
        let idx = self.col(name).expect("required column checked on read");
        rec.get(idx)
            .ok_or_else(|| self.schema_err(line, format!("missing field '{name}'")))
    }

    fn parse<T: FromStr>(&self, line: u64, rec: &StringRecord, name: &str) -> Result<T> {
        let raw = self.text(line, rec, name)?;
        raw.parse()
            .map_err(|_| self.schema_err(line, format!("cannot parse {name} = '{raw}'")))
    }

    fn number(&self, line: u64, rec: &StringRecord, name: &str) -> Result<f64> {
        let v: f64 = self.parse(line, rec, name)?;
        if !v.is_finite() {
            return Err(self.schema_err(line, format!("{name} is not finite")));
        }
        Ok(v)
    }

    fn flag(&self, line: u64, rec: &StringRecord, name: &str) -> Result<bool> {
        match self.text(line, rec, name)? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.schema_err(line, format!("{name} must be 0 or 1, got '{other}'"))),
        }
    }

    fn cohort(&self, line: u64, rec: &StringRecord) -> Result<Cohort> {
        let lo: u32 = self.parse(line, rec, "cohort_lo")?;
        let hi =
            match self.text(line, rec, "cohort_hi")? {
                "" | "+" => None,
                raw => Some(raw.parse::<u32>().map_err(|_| {
                    self.schema_err(line, format!("cannot parse cohort_hi = '{raw}'"))
                })?),
            };
        if hi.is_some_and(|hi| hi < lo) {
            return Err(self.schema_err(line, format!("cohort {lo}-{} is empty", hi.unwrap())));
        }
        Ok(Cohort { lo, hi })
    }

    fn grid(&self, cohorts: &BTreeSet<Cohort>) -> Result<CohortGrid> {
        CohortGrid::from_cohorts(cohorts.iter().copied().collect())
            .map_err(|e| self.schema_err(1, e.to_string()))
    }
}

/// Cells keyed by (date, cohort), with the line each came from.
type CohortCells = BTreeMap<(i32, Cohort), (u64, f64)>;

fn insert_cell(
    table: &Table,
    cells: &mut CohortCells,
    key: (i32, Cohort),
    line: u64,
    v: f64,
) -> Result<()> {
    if let Some((first, _)) = cells.insert(key, (line, v)) {
        return Err(table.schema_err(
            line,
            format!(
                "duplicate entry for date {} cohort {} (first on line {first})",
                key.0, key.1
            ),
        ));
    }
    Ok(())
}

/// Lays cells out as rows per date, failing on any missing cohort.
fn cells_to_rows(
    table: &Table,
    what: &str,
    grid: &CohortGrid,
    dates: &[i32],
    cells: &CohortCells,
) -> Result<Vec<Vec<f64>>> {
    dates
        .iter()
        .map(|date| {
            grid.cohorts()
                .iter()
                .map(|c| {
                    cells.get(&(*date, *c)).map(|(_, v)| *v).ok_or_else(|| {
                        table.schema_err(1, format!("{what}: date {date} is missing cohort {c}"))
                    })
                })
                .collect()
        })
        .collect()
}

fn first_gap(dates: &BTreeSet<i32>) -> Option<i32> {
    dates
        .iter()
        .zip(dates.iter().skip(1))
        .find(|(a, b)| **b - **a != STEP_YEARS)
        .map(|(a, _)| a + STEP_YEARS)
}

/// Reads every scenario in a population file.
pub fn read_population_csv(path: &Path) -> Result<BTreeMap<String, PopulationPath>> {
    let table = Table::read(path, &POPULATION_COLUMNS)?;
    let mut by_scenario: BTreeMap<String, CohortCells> = BTreeMap::new();
    let mut cohorts = BTreeSet::new();
    for (line, rec) in &table.rows {
        let scenario = table.text(*line, rec, "scenario")?.to_string();
        if scenario.is_empty() {
            return Err(table.schema_err(*line, "empty scenario id"));
        }
        let date: i32 = table.parse(*line, rec, "date")?;
        let cohort = table.cohort(*line, rec)?;
        let count = table.number(*line, rec, "count_thousands")?;
        if count < 0.0 {
            return Err(Error::NegativeCount {
                path: path.to_path_buf(),
                line: *line,
                value: count,
            });
        }
        cohorts.insert(cohort);
        insert_cell(
            &table,
            by_scenario.entry(scenario).or_default(),
            (date, cohort),
            *line,
            count,
        )?;
    }
    if by_scenario.is_empty() {
        return Err(table.schema_err(1, "no population rows"));
    }
    let grid = table.grid(&cohorts)?;

    let mut paths = BTreeMap::new();
    for (scenario, cells) in by_scenario {
        let dates: BTreeSet<i32> = cells.keys().map(|(d, _)| *d).collect();
        if let Some(date) = first_gap(&dates) {
            return Err(Error::DateGap {
                path: path.to_path_buf(),
                scenario,
                date,
            });
        }
        let dates: Vec<i32> = dates.into_iter().collect();
        let rows = cells_to_rows(&table, &scenario, &grid, &dates, &cells)?;
        let p = PopulationPath::new(scenario.clone(), grid.clone(), dates, rows)?;
        paths.insert(scenario, p);
    }
    Ok(paths)
}

/// Loads one of the four exogenous scenarios from a population file.
pub fn load_exogenous_path(name: &str, path: &Path) -> Result<PopulationPath> {
    if !EXOGENOUS_SCENARIOS.contains(&name) {
        return Err(Error::Unresolvable {
            kind: "exogenous population scenario",
            id: name.to_string(),
            valid: EXOGENOUS_SCENARIOS.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut all = read_population_csv(path)?;
    let valid: Vec<String> = all.keys().cloned().collect();
    all.remove(name).ok_or_else(|| Error::Unresolvable {
        kind: "population scenario",
        id: name.to_string(),
        valid,
    })
}

pub fn read_mortality_csv(path: &Path) -> Result<MortalityTable> {
    let table = Table::read(path, &["date", "cohort_lo", "cohort_hi", "pd_5yr"])?;
    let has_le = table.col("life_expectancy").is_some();
    let mut pd_cells = CohortCells::new();
    let mut le_cells = CohortCells::new();
    let mut le_complete = has_le;
    let mut cohorts = BTreeSet::new();
    for (line, rec) in &table.rows {
        let date: i32 = table.parse(*line, rec, "date")?;
        let cohort = table.cohort(*line, rec)?;
        let pd = table.number(*line, rec, "pd_5yr")?;
        if !(0.0..=1.0).contains(&pd) {
            return Err(table.schema_err(*line, format!("pd_5yr = {pd} outside [0, 1]")));
        }
        cohorts.insert(cohort);
        insert_cell(&table, &mut pd_cells, (date, cohort), *line, pd)?;
        if has_le {
            match table.text(*line, rec, "life_expectancy")? {
                "" => le_complete = false,
                _ => {
                    let le = table.number(*line, rec, "life_expectancy")?;
                    le_cells.insert((date, cohort), (*line, le));
                }
            }
        }
    }
    if pd_cells.is_empty() {
        return Err(table.schema_err(1, "no mortality rows"));
    }
    let grid = table.grid(&cohorts)?;
    let dates: BTreeSet<i32> = pd_cells.keys().map(|(d, _)| *d).collect();
    if let Some(date) = first_gap(&dates) {
        return Err(Error::DateGap {
            path: path.to_path_buf(),
            scenario: "mortality".into(),
            date,
        });
    }
    let dates: Vec<i32> = dates.into_iter().collect();
    let rows = cells_to_rows(&table, "mortality", &grid, &dates, &pd_cells)?;
    let mortality = MortalityTable::new(grid.clone(), dates.clone(), rows)?;
    if le_complete {
        let le = cells_to_rows(&table, "life expectancy", &grid, &dates, &le_cells)?;
        mortality.with_life_expectancy(le)
    } else {
        Ok(mortality)
    }
}

pub fn read_rr_mortality_csv(path: &Path) -> Result<Vec<StudyRecord>> {
    let table = Table::read(
        path,
        &[
            "cohort_lo",
            "cohort_hi",
            "rr_lower",
            "rr_upper",
            "diluted",
            "source_tag",
        ],
    )?;
    let mut records = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let cohort = table.cohort(*line, rec)?;
        let rr_lower = table.number(*line, rec, "rr_lower")?;
        let rr_upper = table.number(*line, rec, "rr_upper")?;
        if rr_lower < 0.0 || rr_upper < rr_lower {
            return Err(table.schema_err(
                *line,
                format!("need 0 <= rr_lower <= rr_upper, got {rr_lower} and {rr_upper}"),
            ));
        }
        records.push(StudyRecord {
            cohort_lo: cohort.lo,
            cohort_hi: cohort.hi,
            rr_lower,
            rr_upper,
            diluted: table.flag(*line, rec, "diluted")?,
            source_tag: table.text(*line, rec, "source_tag")?.to_string(),
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    Ok(records)
}

fn service(table: &Table, line: u64, rec: &StringRecord) -> Result<Service> {
    let raw = table.text(line, rec, "service")?;
    raw.parse()
        .map_err(|e: Error| table.schema_err(line, e.to_string()))
}

pub fn read_rr_utilization_csv(path: &Path) -> Result<UtilizationRRSet> {
    let table = Table::read(path, &["service", "rr", "diluted"])?;
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    for (line, rec) in &table.rows {
        let svc = service(&table, *line, rec)?;
        if !seen.insert(svc) {
            return Err(table.schema_err(*line, format!("duplicate service {svc}")));
        }
        let rr = table.number(*line, rec, "rr")?;
        if rr < 0.0 {
            return Err(table.schema_err(*line, format!("negative rr {rr}")));
        }
        let diluted = table.flag(*line, rec, "diluted")?;
        entries.push((svc, RelativeRisk { value: rr, diluted }));
    }
    UtilizationRRSet::new(entries)
}

fn read_keyed_profiles(
    path: &Path,
    key: &str,
    value: &str,
) -> Result<(Table, CohortGrid, BTreeMap<String, Vec<f64>>)> {
    let table = Table::read(path, &[key, "cohort_lo", "cohort_hi", value])?;
    let mut by_key: BTreeMap<String, CohortCells> = BTreeMap::new();
    let mut cohorts = BTreeSet::new();
    for (line, rec) in &table.rows {
        let id = table.text(*line, rec, key)?.to_string();
        let cohort = table.cohort(*line, rec)?;
        let v = table.number(*line, rec, value)?;
        cohorts.insert(cohort);
        insert_cell(&table, by_key.entry(id).or_default(), (0, cohort), *line, v)?;
    }
    if by_key.is_empty() {
        return Err(table.schema_err(1, "no rows"));
    }
    let grid = table.grid(&cohorts)?;
    let mut out = BTreeMap::new();
    for (id, cells) in by_key {
        let mut rows = cells_to_rows(&table, &id, &grid, &[0], &cells)?;
        out.insert(id, rows.remove(0));
    }
    Ok((table, grid, out))
}

pub fn read_cost_profiles_csv(path: &Path) -> Result<BTreeMap<String, CostProfile>> {
    let (table, grid, profiles) = read_keyed_profiles(path, "profile_id", "eur_per_capita")?;
    profiles
        .into_iter()
        .map(|(id, values)| {
            let p = CostProfile::new(id.clone(), grid.clone(), values)
                .map_err(|e| table.schema_err(1, e.to_string()))?;
            Ok((id, p))
        })
        .collect()
}

pub fn read_ds_ratio_csv(path: &Path) -> Result<BTreeMap<String, DSRatioProfile>> {
    let (table, grid, profiles) = read_keyed_profiles(path, "scenario", "ratio")?;
    profiles
        .into_iter()
        .map(|(id, values)| {
            let p = DSRatioProfile::new(id.clone(), grid.clone(), values)
                .map_err(|e| table.schema_err(1, e.to_string()))?;
            Ok((id, p))
        })
        .collect()
}

pub fn read_shares_csv(path: &Path) -> Result<ExpenditureShares> {
    let table = Table::read(path, &["service", "fraction"])?;
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, rec) in &table.rows {
        let svc = service(&table, *line, rec)?;
        if !seen.insert(svc) {
            return Err(table.schema_err(*line, format!("duplicate service {svc}")));
        }
        entries.push((svc, table.number(*line, rec, "fraction")?));
    }
    ExpenditureShares::new(entries)
}

pub fn read_gdp_csv(path: &Path) -> Result<GdpPath> {
    let table = Table::read(path, &["date", "eur_millions"])?;
    let mut values = BTreeMap::new();
    for (line, rec) in &table.rows {
        let date: i32 = table.parse(*line, rec, "date")?;
        let v = table.number(*line, rec, "eur_millions")?;
        if v <= 0.0 {
            return Err(table.schema_err(*line, format!("GDP must be positive, got {v}")));
        }
        if values.insert(date, v).is_some() {
            return Err(table.schema_err(*line, format!("duplicate date {date}")));
        }
    }
    GdpPath::new(values)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(out)
}

fn write_err(e: csv::Error) -> Error {
    Error::Csv {
        path: PathBuf::from("<output>"),
        source: e,
    }
}

fn cohort_fields(c: &Cohort) -> (String, String) {
    (
        c.lo.to_string(),
        c.hi.map(|h| h.to_string()).unwrap_or_default(),
    )
}

pub fn write_population_csv<W: Write>(out: W, paths: &[&PopulationPath]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(POPULATION_COLUMNS).map_err(write_err)?;
    for path in paths {
        for (date, row) in path.dates().iter().zip(path.rows()) {
            for (cohort, count) in path.grid().cohorts().iter().zip(row) {
                let (lo, hi) = cohort_fields(cohort);
                w.write_record([
                    path.scenario.as_str(),
                    &date.to_string(),
                    &lo,
                    &hi,
                    &fmt_sig6(*count),
                ])
                .map_err(write_err)?;
            }
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<output>"),
        source,
    })
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<output>"),
        source,
    })
}

pub fn write_sensitivity_csv<W: Write>(out: W, rows: &[SensitivityRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(SENSITIVITY_COLUMNS).map_err(write_err)?;
    for row in rows {
        let r = &row.result;
        w.write_record([
            row.model.code().to_string(),
            row.population.clone(),
            row.mortality_rr.to_string(),
            fmt_sig6(r.rf),
            fmt_sig6(r.crimi_eur_m),
            fmt_sig6(r.criui_eur_m),
            fmt_sig6(r.cri_eur_m),
            fmt_sig6(units::percent(r.cri_gdp_share())),
        ])
        .map_err(write_err)?;
    }
    flush(w)
}

pub fn write_impact_csv<W: Write>(out: W, result: &ImpactResult) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(IMPACT_COLUMNS).map_err(write_err)?;
    for (name, eur, share) in [
        ("crimi", result.crimi_eur_m, result.crimi_gdp_share()),
        ("criui", result.criui_eur_m, result.criui_gdp_share()),
        ("cri", result.cri_eur_m, result.cri_gdp_share()),
    ] {
        w.write_record([
            name.to_string(),
            fmt_sig6(eur),
            fmt_sig6(units::percent(share)),
        ])
        .map_err(write_err)?;
    }
    flush(w)
}

pub fn write_expenditure_csv<W: Write>(out: W, paths: &[ExpenditurePath]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(EXPENDITURE_COLUMNS).map_err(write_err)?;
    for path in paths {
        for ((date, eur), share) in path
            .dates
            .iter()
            .zip(&path.eur_millions)
            .zip(path.gdp_shares())
        {
            w.write_record([
                path.model.code().to_string(),
                date.to_string(),
                fmt_sig6(*eur),
                share
                    .map(|s| fmt_sig6(units::percent(s)))
                    .unwrap_or_default(),
            ])
            .map_err(write_err)?;
        }
    }
    flush(w)
}

/// A row of a result table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRecord {
    pub model: Model,
    pub pop_scenario: String,
    pub rr_selector: String,
    pub rf: f64,
    pub crimi_eur_m: f64,
    pub criui_eur_m: f64,
    pub cri_eur_m: f64,
    pub cri_gdp_pct: f64,
}

pub fn read_sensitivity_csv(path: &Path) -> Result<Vec<SensitivityRecord>> {
    let table = Table::read(path, &SENSITIVITY_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            let model = table
                .text(*line, rec, "model")?
                .parse()
                .map_err(|e: Error| table.schema_err(*line, e.to_string()))?;
            Ok(SensitivityRecord {
                model,
                pop_scenario: table.text(*line, rec, "pop_scenario")?.to_string(),
                rr_selector: table.text(*line, rec, "rr_selector")?.to_string(),
                rf: table.number(*line, rec, "rf")?,
                crimi_eur_m: table.number(*line, rec, "crimi_eur_m")?,
                criui_eur_m: table.number(*line, rec, "criui_eur_m")?,
                cri_eur_m: table.number(*line, rec, "cri_eur_m")?,
                cri_gdp_pct: table.number(*line, rec, "cri_gdp_pct")?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactRecord {
    pub component: String,
    pub eur_m: f64,
    pub gdp_pct: f64,
}

pub fn read_impact_csv(path: &Path) -> Result<Vec<ImpactRecord>> {
    let table = Table::read(path, &IMPACT_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            let component = table.text(*line, rec, "component")?.to_string();
            if !["crimi", "criui", "cri"].contains(&component.as_str()) {
                return Err(table.schema_err(*line, format!("unknown component '{component}'")));
            }
            Ok(ImpactRecord {
                component,
                eur_m: table.number(*line, rec, "eur_m")?,
                gdp_pct: table.number(*line, rec, "gdp_pct")?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpenditureRecord {
    pub model: Model,
    pub date: i32,
    pub eur_m: f64,
    pub gdp_pct: Option<f64>,
}

pub fn read_expenditure_csv(path: &Path) -> Result<Vec<ExpenditureRecord>> {
    let table = Table::read(path, &EXPENDITURE_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            let model = table
                .text(*line, rec, "model")?
                .parse()
                .map_err(|e: Error| table.schema_err(*line, e.to_string()))?;
            let gdp_pct = match table.text(*line, rec, "gdp_pct")? {
                "" => None,
                _ => Some(table.number(*line, rec, "gdp_pct")?),
            };
            Ok(ExpenditureRecord {
                model,
                date: table.parse(*line, rec, "date")?,
                eur_m: table.number(*line, rec, "eur_m")?,
                gdp_pct,
            })
        })
        .collect()
}

/// Result-file layouts recognised by their header row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultSchema {
    Sensitivity,
    Impact,
    Expenditure,
    Population,
}

/// Identifies a result file from its header. `Ok(None)` for an empty file.
pub fn detect_result_schema(path: &Path) -> Result<Option<ResultSchema>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let Some(header) = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
    else {
        return Ok(None);
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let schema = if cols == SENSITIVITY_COLUMNS {
        ResultSchema::Sensitivity
    } else if cols == IMPACT_COLUMNS {
        ResultSchema::Impact
    } else if cols == EXPENDITURE_COLUMNS {
        ResultSchema::Expenditure
    } else if cols == POPULATION_COLUMNS {
        ResultSchema::Population
    } else {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unknown result file schema: {header}"),
        });
    };
    Ok(Some(schema))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(contents: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let mut f = File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        (dir, path)
    }

    fn population_file(skip_date: Option<i32>, negative_at: Option<(i32, u32)>) -> String {
        let mut s = String::from("scenario,date,cohort_lo,cohort_hi,count_thousands\n");
        for date in (2010..=2060).step_by(5) {
            if Some(date) == skip_date {
                continue;
            }
            for i in 0..20u32 {
                let lo = i * 5;
                let hi = if i == 19 {
                    String::new()
                } else {
                    (lo + 4).to_string()
                };
                let v = if negative_at == Some((date, lo)) {
                    -1.0
                } else {
                    3000.0 - i as f64
                };
                s.push_str(&format!("PopMV,{date},{lo},{hi},{v}\n"));
            }
        }
        s
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(456.1038), "456.104");
        assert_eq!(fmt_sig6(1.027150000001), "1.02715");
        assert_eq!(fmt_sig6(9426.1452), "9426.15");
        assert_eq!(fmt_sig6(1_520_346.0), "1520350");
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(-0.0), "0");
        assert_eq!(fmt_sig6(-12.5), "-12.5000");
        assert_eq!(fmt_sig6(999_999.6), "1000000");
        assert_eq!(fmt_sig6(0.000123456789), "0.000123457");
    }

    #[test]
    fn well_formed_population() {
        let (_d, path) = tmp(&population_file(None, None));
        let p = load_exogenous_path("PopMV", &path).unwrap();
        assert_eq!(p.dates().len(), 11);
        assert_eq!(p.grid(), &CohortGrid::five_year());
        let cells: usize = p.rows().iter().map(Vec::len).sum();
        assert_eq!(cells, 220);
    }

    #[test]
    fn population_date_gap() {
        let (_d, path) = tmp(&population_file(Some(2035), None));
        assert!(matches!(
            read_population_csv(&path),
            Err(Error::DateGap { date: 2035, .. })
        ));
    }

    #[test]
    fn population_negative_count_has_line() {
        let (_d, path) = tmp(&population_file(None, Some((2020, 45))));
        match read_population_csv(&path) {
            // header + 2 dates × 20 rows + 10th cohort
            Err(Error::NegativeCount { line, value, .. }) => {
                assert_eq!(line, 1 + 40 + 10);
                assert_eq!(value, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn population_schema_errors() {
        let (_d, path) = tmp("scenario,date,cohort_lo,count_thousands\nPopMV,2010,0,1\n");
        assert!(matches!(
            read_population_csv(&path),
            Err(Error::Schema { .. })
        ));
        let (_d, path) =
            tmp("scenario,date,cohort_lo,cohort_hi,count_thousands\nPopMV,2010,0,,abc\n");
        let err = read_population_csv(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        let (_d, path) = tmp(&population_file(None, None));
        assert!(matches!(
            load_exogenous_path("PopSV", &path),
            Err(Error::Unresolvable { .. })
        ));
        assert!(matches!(
            load_exogenous_path("PopHV", &path),
            Err(Error::Unresolvable { .. })
        ));
    }

    #[test]
    fn mortality_with_and_without_life_expectancy() {
        let (_d, path) = tmp("date,cohort_lo,cohort_hi,pd_5yr,life_expectancy\n\
             2010,0,4,0.002,80.1\n2010,5,,0.5,10\n\
             2015,0,4,0.0019,80.3\n2015,5,,0.49,10.2\n");
        let m = read_mortality_csv(&path).unwrap();
        assert_eq!(m.dates(), &[2010, 2015]);
        assert_eq!(m.at(2015).unwrap(), &[0.0019, 0.49]);
        assert_eq!(m.life_expectancy().unwrap()[0], vec![80.1, 10.0]);

        let (_d, path) = tmp("date,cohort_lo,cohort_hi,pd_5yr\n2010,0,4,0.002\n2010,5,,1.5\n");
        assert!(matches!(
            read_mortality_csv(&path),
            Err(Error::Schema { line: 3, .. })
        ));
    }

    #[test]
    fn rr_files() {
        let (_d, path) = tmp("cohort_lo,cohort_hi,rr_lower,rr_upper,diluted,source_tag\n\
             20,24,1.5,2.1,0,cohort-studies\n15,+,1.05,1.08,1,russia\n");
        let recs = read_rr_mortality_csv(&path).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].cohort_hi, None);
        assert!(recs[1].diluted);

        let (_d, path) = tmp("service,rr,diluted\nH,1.33,0\nS,1.63,0\nGP,1.2,0\n");
        let set = read_rr_utilization_csv(&path).unwrap();
        assert_eq!(
            set.get(Service::Hospital),
            Some(RelativeRisk::undiluted(1.33))
        );
        assert_eq!(
            set.get(Service::Pharmaceutical),
            Some(RelativeRisk::diluted(1.0))
        );

        let (_d, path) = tmp("service,rr,diluted\nH,1.33,2\n");
        assert!(matches!(
            read_rr_utilization_csv(&path),
            Err(Error::Schema { line: 2, .. })
        ));
    }

    #[test]
    fn profiles_shares_gdp() {
        let (_d, path) = tmp("profile_id,cohort_lo,cohort_hi,eur_per_capita\n\
             ARC1,0,4,500\nARC1,5,,900\nARC2,0,4,400\nARC2,5,,1000\n");
        let profiles = read_cost_profiles_csv(&path).unwrap();
        assert_eq!(profiles["ARC2"].values(), &[400.0, 1000.0]);

        let (_d, path) = tmp("profile_id,cohort_lo,cohort_hi,eur_per_capita\nARC1,0,4,500\nARC1,5,,900\nARC2,0,4,400\n");
        assert!(read_cost_profiles_csv(&path).is_err());

        let (_d, path) = tmp("scenario,cohort_lo,cohort_hi,ratio\nDS1,0,,3\n");
        assert_eq!(read_ds_ratio_csv(&path).unwrap()["DS1"].values(), &[3.0]);

        let (_d, path) = tmp("service,fraction\nH,0.71\nP,0.10\nS,0.04\nGP,0.06\nR,0.02\nm,0.07\n");
        assert_eq!(
            read_shares_csv(&path).unwrap(),
            ExpenditureShares::italy_2008()
        );

        let (_d, path) = tmp("date,eur_millions\n2015,1520346\n");
        assert_eq!(read_gdp_csv(&path).unwrap().at(2015), Some(1_520_346.0));
        let (_d, path) = tmp("date,eur_millions\n2015,-1\n");
        assert!(read_gdp_csv(&path).is_err());
    }

    #[test]
    fn population_round_trip() {
        let (_d, path) = tmp(&population_file(None, None));
        let p = read_population_csv(&path).unwrap().remove("PopMV").unwrap();
        let mut buf = Vec::new();
        write_population_csv(&mut buf, &[&p]).unwrap();
        let (_d2, path2) = tmp(std::str::from_utf8(&buf).unwrap());
        assert_eq!(read_population_csv(&path2).unwrap()["PopMV"], p);
        assert_eq!(
            detect_result_schema(&path2).unwrap(),
            Some(ResultSchema::Population)
        );
    }

    #[test]
    fn schema_detection() {
        let (_d, path) = tmp("");
        assert_eq!(detect_result_schema(&path).unwrap(), None);
        let (_d, path) = tmp("component,eur_m,gdp_pct\n");
        assert_eq!(
            detect_result_schema(&path).unwrap(),
            Some(ResultSchema::Impact)
        );
        let (_d, path) = tmp("a,b\n1,2\n");
        assert!(matches!(
            detect_result_schema(&path),
            Err(Error::Schema { .. })
        ));
    }
}
