//! `barylab` command-line runner: strict JSON configs in; CSV, JSON and SVG
//! artifacts plus a `manifest.json` out.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{parse_config, BarycenterConfig, CurvatureConfig, HuggingConfig, TailConfig};
pub use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "barylab", version, about = "Barycenter rate experiments on geodesic model spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean squared distance of empirical barycenters against a rate bound; writes rates.csv.
    Rates(RunArgs),
    /// Exceedance frequency of the high-probability threshold; writes tail.csv.
    Tail(RunArgs),
    /// Hugging function against its extendibility lower bound; writes hugging.csv.
    Hugging(RunArgs),
    /// Quadruple defects, angle monotonicity and cone distances; writes curvature.csv.
    Curvature(RunArgs),
    /// Solves one barycenter problem; writes barycenter.json.
    Barycenter(RunArgs),
    /// Log-log chart of rates CSV files; writes plot.svg.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config file; unknown keys are rejected.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "barylab-out")]
    pub out: PathBuf,
    /// Master seed, overriding the config (unused by barycenter).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, env = "BARYLAB_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Exit with status 3 when any bound check fails.
    #[arg(long)]
    pub strict_bounds: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Rates CSV file; repeat for several.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "barylab-out")]
    pub out: PathBuf,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rates(_) => "rates",
            Command::Tail(_) => "tail",
            Command::Hugging(_) => "hugging",
            Command::Curvature(_) => "curvature",
            Command::Barycenter(_) => "barycenter",
            Command::Plot(_) => "plot",
        }
    }
}

/// Result of a run that got far enough to write its artifacts.
#[derive(Debug)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub summary: String,
    /// Failed bound checks, reported as warnings unless `--strict-bounds`.
    pub violations: Vec<String>,
    pub error: Option<CliError>,
}

impl RunReport {
    pub fn exit_code(&self) -> u8 {
        self.error.as_ref().map_or(0, CliError::exit_code)
    }
}

/// Runs one subcommand, writes its artifacts and manifest into the output
/// directory and returns the report. Errors before any artifact exists are
/// returned as `Err`.
pub fn run(command: &Command) -> Result<RunReport, CliError> {
    let started_at = manifest::now();
    let (out, strict) = match command {
        Command::Plot(a) => (a.out.clone(), false),
        Command::Rates(a) | Command::Tail(a) | Command::Hugging(a) | Command::Curvature(a) | Command::Barycenter(a) => {
            configure_threads(a.threads);
            (a.out.clone(), a.strict_bounds)
        }
    };
    let outcome: Outcome = match command {
        Command::Rates(a) => commands::rates(parse_config(&a.config)?, a.seed)?,
        Command::Tail(a) => commands::tail(parse_config::<TailConfig>(&a.config)?, a.seed)?,
        Command::Hugging(a) => commands::hugging(parse_config::<HuggingConfig>(&a.config)?, a.seed)?,
        Command::Curvature(a) => commands::curvature(parse_config::<CurvatureConfig>(&a.config)?, a.seed)?,
        Command::Barycenter(a) => commands::barycenter_solve(parse_config::<BarycenterConfig>(&a.config)?)?,
        Command::Plot(a) => commands::plot(&a.inputs)?,
    };
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let mut outputs = Vec::new();
    for (name, contents) in &outcome.files {
        let path = out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        outputs.push(path);
    }
    let error = match outcome.failure {
        Some(e) => Some(e),
        None if strict && !outcome.violations.is_empty() => Some(CliError::BoundViolated(outcome.violations.clone())),
        None => None,
    };
    let mut manifest = RunManifest {
        command: command.name().into(),
        config: outcome.config,
        version: barylab::VERSION.into(),
        platform: manifest::platform(),
        master_seed: outcome.master_seed,
        threads: rayon::current_num_threads(),
        started_at,
        finished_at: String::new(),
        outputs,
        exit_code: error.as_ref().map_or(0, CliError::exit_code),
    };
    manifest.finished_at = manifest::now();
    manifest.write(&out)?;
    Ok(RunReport { manifest, summary: outcome.summary, violations: outcome.violations, error })
}

/// Sizes the global pool once per process; later calls keep the first size.
fn configure_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}
