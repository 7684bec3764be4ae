use std::path::{Path, PathBuf};

use hce_core::io::{self, ResultSchema};
use hce_core::units::percent;
use hce_core::{
    cri, expenditure_ch, expenditure_dc, expenditure_pd, sensitivity_grid, ExpenditurePath,
    ImpactResult, PopulationPath, ScenarioConfig, ScenarioInputs, SensitivityRow,
};

use crate::error::CliError;
use crate::manifest::{Format, RunManifest};
use crate::render::{eur, factor, pct, TextTable};

/// Options shared by every subcommand.
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: Format,
    pub seedless: bool,
}

/// Files produced by a command, held in memory until everything has been
/// computed so that a failure leaves no partial output behind.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    pub stdout: String,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, contents: Vec<u8>) {
        self.files.push((name.into(), contents));
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn commit(&self, dir: &Path) -> Result<(), CliError> {
        if self.files.is_empty() {
            return Ok(());
        }
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(io_err(&path))?;
        }
        Ok(())
    }
}

fn csv_bytes(
    write: impl FnOnce(&mut Vec<u8>) -> hce_core::Result<()>,
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn population_table(path: &PopulationPath) -> TextTable {
    let mut headers = vec!["cohort".to_string()];
    headers.extend(path.dates().iter().map(i32::to_string));
    let mut t = TextTable::new(headers);
    for (i, cohort) in path.grid().cohorts().iter().enumerate() {
        let mut row = vec![cohort.to_string()];
        row.extend(path.rows().iter().map(|r| eur(r[i])));
        t.push(row);
    }
    let mut total = vec!["total".to_string()];
    total.extend(path.rows().iter().map(|r| eur(r.iter().sum())));
    t.push(total);
    t
}

pub fn project(manifest: &RunManifest, opts: &RunOptions) -> Result<Outputs, CliError> {
    let scenarios = manifest.simulated_scenarios()?;
    if scenarios.is_empty() {
        return Err(manifest.err(
            "project.scenarios",
            "project.scenarios lists no scenarios".into(),
        ));
    }
    let population = manifest.input_path("input.population")?;
    let mortality = manifest.input_path("input.mortality")?;
    let exogenous = io::read_population_csv(&population)?;
    let mortality = io::read_mortality_csv(&mortality)?;
    // Validates the remaining project keys before any projection runs.
    manifest.project_initial()?;
    manifest.project_horizon()?;

    let paths = manifest.simulate(&exogenous, &mortality, &scenarios)?;
    let mut out = Outputs::default();
    let mut summary = TextTable::new(["scenario", "first date", "total", "last date", "total"]);
    for path in &paths {
        match opts.format {
            Format::Csv => out.add(
                format!("population_{}.csv", path.scenario),
                csv_bytes(|b| io::write_population_csv(b, &[path]))?,
            ),
            Format::Table => out.add(
                format!("population_{}.txt", path.scenario),
                population_table(path).render().into_bytes(),
            ),
        }
        let first = *path.dates().first().expect("projection has dates");
        let last = *path.dates().last().expect("projection has dates");
        summary.push(vec![
            path.scenario.clone(),
            first.to_string(),
            eur(path.total(first)?),
            last.to_string(),
            eur(path.total(last)?),
        ]);
    }
    out.stdout = summary.render();
    Ok(out)
}

fn base_paths(
    inputs: &ScenarioInputs,
    config: &ScenarioConfig,
) -> Result<Vec<ExpenditurePath>, CliError> {
    let lookup = |kind: &'static str, id: &str, valid: Vec<String>| hce_core::Error::Unresolvable {
        kind,
        id: id.to_string(),
        valid,
    };
    let pop = inputs.populations.get(&config.population).ok_or_else(|| {
        lookup(
            "population scenario",
            &config.population,
            inputs.populations.keys().cloned().collect(),
        )
    })?;
    let costs = inputs
        .cost_profiles
        .get(&config.cost_profile)
        .ok_or_else(|| {
            lookup(
                "cost profile",
                &config.cost_profile,
                inputs.cost_profiles.keys().cloned().collect(),
            )
        })?;
    let ds = inputs.ds_profiles.get(&config.ds_scenario).ok_or_else(|| {
        lookup(
            "D/S scenario",
            &config.ds_scenario,
            inputs.ds_profiles.keys().cloned().collect(),
        )
    })?;
    Ok(vec![
        expenditure_pd(pop, costs, &inputs.params)?,
        expenditure_ch(pop, costs, &inputs.mortality, &inputs.params)?,
        expenditure_dc(pop, costs, ds, &inputs.mortality, &inputs.params)?,
    ])
}

fn impact_table(r: &ImpactResult) -> TextTable {
    let mut t = TextTable::new(["component", "EUR m", "% GDP"]);
    for (name, v, s) in [
        ("CRIMI", r.crimi_eur_m, r.crimi_gdp_share()),
        ("CRIUI", r.criui_eur_m, r.criui_gdp_share()),
        ("CRI", r.cri_eur_m, r.cri_gdp_share()),
    ] {
        t.push(vec![name.into(), eur(v), pct(percent(s))]);
    }
    t
}

fn expenditure_table(paths: &[ExpenditurePath]) -> TextTable {
    let mut t = TextTable::new(["model", "date", "EUR m", "% GDP"]);
    for p in paths {
        for ((d, v), s) in p.dates.iter().zip(&p.eur_millions).zip(p.gdp_shares()) {
            t.push(vec![
                p.model.code().into(),
                d.to_string(),
                eur(*v),
                s.map(|s| pct(percent(s))).unwrap_or_default(),
            ]);
        }
    }
    t
}

fn config_echo(manifest: &RunManifest, config: &ScenarioConfig, opts: &RunOptions) -> String {
    let mut s = format!(
        "scenario.population = {}\nscenario.model = {}\nscenario.cost_profile = {}\n\
         scenario.ds = {}\nscenario.rr_mortality = {}\nscenario.rr_utilization = {}\n\
         scenario.shock_date = {}\nscenario.unemployment_rate = {}\n",
        config.population,
        config.model,
        config.cost_profile,
        config.ds_scenario,
        config.mortality_rr,
        config.utilization,
        config.shock_date,
        config.labor.unemployment_rate(),
    );
    for line in manifest.echo().lines() {
        if !line.starts_with("scenario.") || line.starts_with("scenario.envelope_policy") {
            s.push_str(line);
            s.push('\n');
        }
    }
    s.push_str(&format!("seedless = {}\n", opts.seedless));
    s
}

pub fn impact(manifest: &RunManifest, opts: &RunOptions) -> Result<Outputs, CliError> {
    let config = manifest.scenario_config()?;
    let inputs = manifest.scenario_inputs()?;
    let result = cri(&inputs, &config)?;
    let paths = base_paths(&inputs, &config)?;

    let echo = config_echo(manifest, &config, opts);
    let mut out = Outputs::default();
    match opts.format {
        Format::Csv => {
            out.add(
                "impact.csv",
                csv_bytes(|b| io::write_impact_csv(b, &result))?,
            );
            out.add(
                "expenditure.csv",
                csv_bytes(|b| io::write_expenditure_csv(b, &paths))?,
            );
        }
        Format::Table => {
            out.add("impact.txt", impact_table(&result).render().into_bytes());
            out.add(
                "expenditure.txt",
                expenditure_table(&paths).render().into_bytes(),
            );
        }
    }
    out.add("impact_config.txt", echo.clone().into_bytes());
    out.stdout = format!(
        "{echo}\nshock date {}: base expenditure {} EUR m, RF {}, GDP {} EUR m\n\n{}",
        result.date,
        eur(result.base_eur_m),
        factor(result.rf),
        eur(result.gdp_eur_m),
        impact_table(&result).render()
    );
    Ok(out)
}

fn sensitivity_table(rows: &[SensitivityRow]) -> TextTable {
    let mut t = TextTable::new([
        "model",
        "population",
        "RR mort",
        "RR util",
        "RF",
        "CRIMI",
        "CRIUI",
        "CRI",
        "CRI % GDP",
    ]);
    for row in rows {
        let r = &row.result;
        t.push(vec![
            row.model.code().into(),
            row.population.clone(),
            row.mortality_rr.to_string(),
            row.utilization.to_string(),
            factor(r.rf),
            eur(r.crimi_eur_m),
            eur(r.criui_eur_m),
            eur(r.cri_eur_m),
            pct(percent(r.cri_gdp_share())),
        ]);
    }
    t
}

fn sensitivity_summary(rows: &[SensitivityRow]) -> String {
    // Ties keep the first row in grid order.
    let mut min = &rows[0];
    let mut max = &rows[0];
    for row in rows {
        if row.result.cri_eur_m < min.result.cri_eur_m {
            min = row;
        }
        if row.result.cri_eur_m > max.result.cri_eur_m {
            max = row;
        }
    }
    let describe = |label: &str, row: &SensitivityRow| {
        format!(
            "CRI {label}: {} EUR m, {}% of GDP ({} {} rr_mortality={} rr_utilization={})\n",
            eur(row.result.cri_eur_m),
            pct(percent(row.result.cri_gdp_share())),
            row.model,
            row.population,
            row.mortality_rr,
            row.utilization,
        )
    };
    format!(
        "rows: {}\n{}{}",
        rows.len(),
        describe("min", min),
        describe("max", max)
    )
}

pub fn sensitivity(manifest: &RunManifest, opts: &RunOptions) -> Result<Outputs, CliError> {
    let config = manifest.scenario_config()?;
    let axes = manifest.sensitivity_axes(&config)?;
    let inputs = manifest.scenario_inputs()?;
    let rows = sensitivity_grid(&inputs, &config, &axes)?;

    let summary = sensitivity_summary(&rows);
    let mut out = Outputs::default();
    match opts.format {
        Format::Csv => out.add(
            "sensitivity.csv",
            csv_bytes(|b| io::write_sensitivity_csv(b, &rows))?,
        ),
        Format::Table => out.add(
            "sensitivity.txt",
            sensitivity_table(&rows).render().into_bytes(),
        ),
    }
    out.add("sensitivity_summary.txt", summary.clone().into_bytes());
    out.stdout = summary;
    Ok(out)
}

fn series_file(points: &[(i32, f64)]) -> Vec<u8> {
    let mut s = String::from("# date eur_m\n");
    for (d, v) in points {
        s.push_str(&format!("{d} {}\n", io::fmt_sig6(*v)));
    }
    s.into_bytes()
}

pub fn report(manifest: &RunManifest, _opts: &RunOptions) -> Result<Outputs, CliError> {
    let inputs = manifest.report_inputs()?;
    let mut out = Outputs::default();
    let mut text = String::new();
    for path in &inputs {
        let name = path.display();
        let schema = io::detect_result_schema(path)?;
        let table = match schema {
            None => None,
            Some(ResultSchema::Impact) => {
                let recs = io::read_impact_csv(path)?;
                let mut t = TextTable::new(["component", "EUR m", "% GDP"]);
                for r in &recs {
                    t.push(vec![
                        r.component.to_uppercase(),
                        eur(r.eur_m),
                        pct(r.gdp_pct),
                    ]);
                }
                Some(t)
            }
            Some(ResultSchema::Expenditure) => {
                let recs = io::read_expenditure_csv(path)?;
                let mut t = TextTable::new(["model", "date", "EUR m", "% GDP"]);
                let mut models = Vec::new();
                for r in &recs {
                    t.push(vec![
                        r.model.code().into(),
                        r.date.to_string(),
                        eur(r.eur_m),
                        r.gdp_pct.map(pct).unwrap_or_default(),
                    ]);
                    if !models.contains(&r.model) {
                        models.push(r.model);
                    }
                }
                for model in models {
                    let points: Vec<(i32, f64)> = recs
                        .iter()
                        .filter(|r| r.model == model)
                        .map(|r| (r.date, r.eur_m))
                        .collect();
                    out.add(format!("series_{}.dat", model.code()), series_file(&points));
                }
                Some(t)
            }
            Some(ResultSchema::Sensitivity) => {
                let recs = io::read_sensitivity_csv(path)?;
                let mut t = TextTable::new([
                    "model",
                    "population",
                    "RR mort",
                    "RF",
                    "CRIMI",
                    "CRIUI",
                    "CRI",
                    "CRI % GDP",
                ]);
                for r in &recs {
                    t.push(vec![
                        r.model.code().into(),
                        r.pop_scenario.clone(),
                        r.rr_selector.clone(),
                        factor(r.rf),
                        eur(r.crimi_eur_m),
                        eur(r.criui_eur_m),
                        eur(r.cri_eur_m),
                        pct(r.cri_gdp_pct),
                    ]);
                }
                Some(t)
            }
            Some(ResultSchema::Population) => {
                let paths = io::read_population_csv(path)?;
                let mut t = TextTable::new(["scenario", "date", "total (thousands)"]);
                for p in paths.values() {
                    for d in p.dates() {
                        t.push(vec![p.scenario.clone(), d.to_string(), eur(p.total(*d)?)]);
                    }
                }
                Some(t)
            }
        };
        match table {
            Some(t) if !t.is_empty() => {
                text.push_str(&format!("{name}\n{}\n", t.render()));
            }
            _ => text.push_str(&format!("{name}: no rows\n\n")),
        }
    }
    out.add("report.txt", text.clone().into_bytes());
    out.stdout = text;
    Ok(out)
}
