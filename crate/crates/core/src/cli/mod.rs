//! JSON-configured experiment runner.
//!
//! A run reads an [`ExperimentConfig`], executes one mode and writes
//! `<mode>.csv` and `<mode>.json` into the output directory. Exit codes:
//! 0 success, 1 failed verification, 2 config error, 3 numeric or I/O error.

mod config;
mod report;
mod run;

pub use config::{BuildSettings, DavisGutSettings, ExperimentConfig, Mode, OutputSettings, RegionShape, RegressionSettings, Tolerances};
pub use report::{emit_report, json_document, write_csv, Report, Table};
pub use run::run;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fielddev", version, about = "Tail asymptotics of linear random fields: predictions, simulation, verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the mode named in the config.
    Run(RunArgs),
    /// Weight-field aggregates per region size.
    Coeffs(RunArgs),
    /// Closed-form tail predictions and validity flags.
    Predict(RunArgs),
    /// Monte Carlo tail estimates.
    Simulate(RunArgs),
    /// Monte Carlo against predictions with pass/fail.
    Verify(RunArgs),
    /// Kernel smoother weights and LIL envelopes.
    Regression(RunArgs),
    /// Davis-Gut series diagnostics.
    DavisGut(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "FIELDDEV_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory for this run; the recorded config keeps its own value.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (Option<Mode>, &RunArgs) {
        match self {
            Command::Run(a) => (None, a),
            Command::Coeffs(a) => (Some(Mode::Coeffs), a),
            Command::Predict(a) => (Some(Mode::Predict), a),
            Command::Simulate(a) => (Some(Mode::Simulate), a),
            Command::Verify(a) => (Some(Mode::Verify), a),
            Command::Regression(a) => (Some(Mode::Regression), a),
            Command::DavisGut(a) => (Some(Mode::DavisGut), a),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Loads the config, applies command-line overrides, runs and writes the
/// reports. Nothing is written unless the whole run succeeds.
pub fn execute(cli: &Cli) -> Result<(i32, Vec<PathBuf>), Error> {
    let (mode, args) = cli.command.parts();
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(m) = mode {
        config.mode = m;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate()?;
    if args.workers == Some(0) {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let report = run(&config, args.workers)?;
    let dir = args.out.as_ref().unwrap_or(&config.output.dir);
    let files = emit_report(&config, &report, dir)?;
    Ok((if report.passed { EXIT_OK } else { EXIT_VERIFICATION_FAILED }, files))
}

/// Entry point for the binary: parses `args`, runs, returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok((code, files)) => {
            for f in files {
                println!("{}", f.display());
            }
            if code == EXIT_VERIFICATION_FAILED {
                eprintln!("fielddev: verification failed");
            }
            code
        }
        Err(e) => {
            eprintln!("fielddev: {e}");
            exit_code(&e)
        }
    }
}
