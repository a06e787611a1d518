use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use z2q_core::{Boundary, Method, StartKind};

#[derive(Debug, Parser)]
#[command(
    name = "z2q",
    version,
    about = "Z2 lattice gauge theory: exact, Monte Carlo and quantum-adiabatic sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact plaquette expectation by enumerating gauge-fixed configurations.
    Exact(ExactArgs),
    /// Glauber Markov chain baseline.
    Mcmc(McmcArgs),
    /// Adiabatic statevector evolution; one row per (beta, T).
    Adiabatic(AdiabaticArgs),
    /// Adiabatic evolution followed by computational-basis measurements.
    Sample(SampleArgs),
    /// Re-analyze a stored ensemble.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 2x2x2x2, open boundaries.
    Hypercube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    Hot,
    Cold,
}

impl From<StartArg> for StartKind {
    fn from(s: StartArg) -> Self {
        match s {
            StartArg::Hot => StartKind::Hot,
            StartArg::Cold => StartKind::Cold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Plain,
    Jackknife,
    Binned,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Plain => Method::Plain,
            MethodArg::Jackknife => Method::Jackknife,
            MethodArg::Binned => Method::Binned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Observable {
    /// Mean plaquette per configuration.
    Plaquette,
    /// Every plaquette separately.
    Plaquettes,
    /// Action per site, `S / N_sites`.
    ActionDensity,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Named lattice; explicit `--dims`/`--boundary` take precedence.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Extent per direction, e.g. `2,2,2,2`.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long, conflicts_with = "beta_grid")]
    pub beta: Option<f64>,
    /// Comma list or `start:stop:step` (inclusive).
    #[arg(long)]
    pub beta_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Total evolution time.
    #[arg(long = "T", conflicts_with = "t_grid")]
    pub t: Option<f64>,
    /// Comma list or `start:stop:step` (inclusive).
    #[arg(long = "T-grid", id = "t_grid")]
    pub t_grid: Option<String>,
    /// Trotter step; rounded so that `T/dt` is an integer.
    #[arg(long, default_value_t = 0.2)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = StartArg::Hot)]
    pub start: StartArg,
}

#[derive(Debug, Args)]
pub struct Common {
    /// File of `key=value` lines, one per flag; command-line flags win.
    #[arg(long)]
    pub run_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub beta: BetaArgs,
    #[command(flatten)]
    pub common: Common,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McmcArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub beta: BetaArgs,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 10_000)]
    pub n_configs: usize,
    /// Sweeps discarded before the first stored configuration.
    #[arg(long, default_value_t = 100)]
    pub n_therm: usize,
    /// Sweeps between stored configurations.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Ensemble destination (single beta only). The summary CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdiabaticArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub beta: BetaArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub common: Common,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub beta: BetaArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub shots: Option<usize>,
    /// Ensemble destination. The summary CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Ensemble file to read.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Error estimator; defaults to the sampler's natural choice.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Observable::Plaquette, Observable::ActionDensity])]
    pub observables: Vec<Observable>,
    /// Accepted for run-file symmetry; analysis is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub run_file: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
