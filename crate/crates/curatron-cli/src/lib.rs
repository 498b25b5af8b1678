//! Command-line orchestration for preference-data repair: scenario
//! construction, recovery runs, metric sweeps, and reproducible
//! experiment grids.
//!
//! Every command is a pure function of its configuration section, the
//! input files, and the master seed; reruns produce byte-identical
//! output files. Randomness is drawn from streams derived from the
//! master seed with fixed per-purpose tags, so grid cells can run in
//! parallel without affecting results.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

pub use config::Config;

/// Exit code for configuration and input validation failures.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for solver runs that exhausted their budget.
pub const EXIT_NON_CONVERGENCE: i32 = 3;

/// Errors surfaced to the command line, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, unreadable or malformed input files, or
    /// violated preconditions.
    #[error("{0}")]
    Validation(String),
    /// A solver finished without reaching its convergence criterion;
    /// output files are still written for inspection.
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::NonConvergence(_) => EXIT_NON_CONVERGENCE,
        }
    }
}

impl From<curatron::Error> for CliError {
    fn from(e: curatron::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Repairs incomplete and adversarially corrupted pairwise preference
/// data and exports curated comparison pairs.
#[derive(Debug, Parser)]
#[command(name = "curatron", version, about)]
pub struct Cli {
    /// Configuration file; missing sections use their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Directory for output files; created if absent.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads for grid commands; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: CommandKind,
}

/// The available subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    /// Generate a synthetic BTL instance or a scored response catalog.
    Simulate,
    /// Delete and corrupt comparisons, or inject adversarial responses.
    Corrupt,
    /// Run a recovery pipeline and write matrix, ranking, and report.
    Recover,
    /// Rank a preference matrix with a chosen procedure.
    Rank,
    /// Compare a candidate matrix and ranking against the ground truth.
    Metrics,
    /// Sweep a deletion-by-corruption grid and summarize recovery quality.
    Experiment,
    /// Compare the repair pipeline against classical rankers under
    /// corruption sweeps.
    Baselines,
    /// Write ranked chosen/rejected pairs for preference fine-tuning.
    Export,
    /// Test whether a matrix is spectrally consistent with the clean model.
    HealthCheck,
}

/// Runs one subcommand against a parsed configuration. This is the same
/// entry point the binary uses; tests call it directly.
pub fn run_command(
    command: CommandKind,
    config: &Config,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    match command {
        CommandKind::Simulate => commands::simulate::run(&config.simulate, seed, out_dir).map(drop),
        CommandKind::Corrupt => commands::corrupt::run(&config.corrupt, seed, out_dir).map(drop),
        CommandKind::Recover => commands::recover::run(&config.recover, out_dir).map(drop),
        CommandKind::Rank => commands::rank::run(&config.rank, out_dir).map(drop),
        CommandKind::Metrics => commands::metrics::run(&config.metrics, out_dir).map(drop),
        CommandKind::Experiment => {
            commands::experiment::run(&config.experiment, seed, out_dir).map(drop)
        }
        CommandKind::Baselines => {
            commands::baselines::run(&config.baselines, seed, out_dir).map(drop)
        }
        CommandKind::Export => commands::export::run(&config.export, seed, out_dir).map(drop),
        CommandKind::HealthCheck => {
            commands::health::run(&config.health_check, out_dir).map(drop)
        }
    }
}

/// Binary entry point: loads the configuration, sizes the thread pool,
/// and dispatches the subcommand.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot size thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    run_command(cli.command, &config, cli.seed, &cli.out_dir)
}
