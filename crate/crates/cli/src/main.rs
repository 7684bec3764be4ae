//! `hce`: command-line driver for the crisis healthcare expenditure engine.

mod commands;
mod error;
mod manifest;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::RunOptions;
use error::CliError;
use manifest::{Format, RunManifest};

#[derive(Parser)]
#[command(
    name = "hce",
    version,
    about = "Crisis impact on public healthcare expenditure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run manifest (flat key = value file).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Output directory; overrides output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; overrides output.format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Assert that the run uses no randomness. The engine is deterministic,
    /// so this only records the assertion in the configuration echo.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Project simulated population scenarios.
    Project,
    /// Compute CRIMI, CRIUI and CRI for one scenario.
    Impact,
    /// Evaluate the sensitivity grid.
    Sensitivity,
    /// Render result files as text tables and plot series.
    Report,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let manifest_path = cli.manifest.as_ref().ok_or_else(|| CliError::Manifest {
        path: PathBuf::from("<none>"),
        line: 0,
        message: "--manifest <path> is required".into(),
    })?;
    let manifest = RunManifest::load(manifest_path)?;
    let opts = RunOptions {
        out_dir: manifest.output_dir(cli.out.as_deref()),
        format: manifest.format(cli.format)?,
        seedless: cli.seedless,
    };
    let outputs = match cli.command {
        Command::Project => commands::project(&manifest, &opts)?,
        Command::Impact => commands::impact(&manifest, &opts)?,
        Command::Sensitivity => commands::sensitivity(&manifest, &opts)?,
        Command::Report => commands::report(&manifest, &opts)?,
    };
    outputs.commit(&opts.out_dir)?;
    let mut stdout = outputs.stdout.clone();
    for name in outputs.file_names() {
        stdout.push_str(&format!("wrote {}\n", opts.out_dir.join(name).display()));
    }
    Ok(stdout)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
