//! Command-line front end for the `kpartite` crate.

pub mod commands;
pub mod error;
pub mod state_file;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::{CliError, Result};
pub use state_file::{PolyTerm, StateFile};

#[derive(Debug, Parser)]
#[command(
    name = "kpartite",
    version,
    about = "Multipartite entanglement hierarchy for continuous-variable states"
)]
pub struct Cli {
    /// Worker threads for grid points and optimizer restarts.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize tau_{k,n} over probe states.
    Tau(TauArgs),
    /// PPT verdict and Z-matrix report for every bipartition.
    Ppt(PptArgs),
    /// Parameter scan of a catalog family, written as CSV.
    Scan(ScanArgs),
    /// tau_{2,n} along thermal-channel evolution, written as CSV.
    Evolve(EvolveArgs),
    /// Monte-Carlo estimate of the symmetric hierarchy from simulated outcomes.
    Measure(MeasureArgs),
    /// Limit-matrix and eigenvalue checks for a standard-form state.
    Limits(LimitsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Optimizer restarts.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Seed for all random draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Hierarchy level.
    #[arg(long)]
    pub k: usize,
    /// TOML file with `coefficients = [...]`, one per bipartition.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct PptArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Ghz,
    CpsTsvs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// GHZ squeezing grid.
    #[arg(long, default_value_t = 0.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 1.2)]
    pub r_max: f64,
    #[arg(long, default_value_t = 61)]
    pub r_steps: usize,
    /// GHZ mixing grid.
    #[arg(long, default_value_t = 0.0)]
    pub g_min: f64,
    #[arg(long, default_value_t = 1.2)]
    pub g_max: f64,
    #[arg(long, default_value_t = 61)]
    pub g_steps: usize,
    /// CPS-TSVS squeezing.
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// CPS-TSVS amplitude grid.
    #[arg(long, default_value_t = 0.0)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 51)]
    pub alpha_steps: usize,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Initial state file; defaults to the CPS-TSVS preset.
    #[arg(long, conflicts_with = "state_preset")]
    pub state: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub state_preset: Option<EvolvePreset>,
    /// Preset squeezing.
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Preset amplitude `|alpha|`.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub nth: f64,
    #[arg(long, default_value_t = 3.0)]
    pub t_max: f64,
    /// Number of time steps; the grid has `steps + 1` points.
    #[arg(long, default_value_t = 60)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvolvePreset {
    CpsTsvs,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TOML file with `s`, `theta` and `x`; defaults to the optimal probes.
    #[arg(long)]
    pub probes: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Optimizer restarts when searching for the probes.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Also write the simulated outcomes as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
}

/// Runs `cli`, writing reports to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    if cli.jobs == 0 {
        return Err(CliError::input("--jobs: must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::input(format!("--jobs: {e}")))?;
    // Reports are buffered so the worker pool never touches the caller's writer.
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| match &cli.command {
        Command::Tau(a) => commands::tau(a, &mut buf),
        Command::Ppt(a) => commands::ppt(a, &mut buf),
        Command::Scan(a) => commands::scan(a, &mut buf),
        Command::Evolve(a) => commands::evolve(a, &mut buf),
        Command::Measure(a) => commands::measure(a, &mut buf),
        Command::Limits(a) => commands::limits(a, &mut buf),
    });
    stdout
        .write_all(&buf)
        .and_then(|_| stdout.flush())
        .map_err(|source| CliError::Io {
            path: "stdout".into(),
            source,
        })?;
    result
}
