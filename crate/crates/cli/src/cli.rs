use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_core::Backend;

pub const OUT_DIR_ENV: &str = "HYBRID_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "hybrid", version, about = "Coupled agent/field solver with certified Picard horizons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the coupled system and write the trajectory and a run manifest.
    Simulate(SimulateArgs),
    /// Run estimate checks and write a report; exits with status 5 on failure.
    Verify(VerifyArgs),
    /// Print the contraction certificate and global bound as key=value lines.
    Bounds(BoundsArgs),
    /// Solve, then write field snapshots on a regular grid.
    FieldExport(FieldExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Pointwise,
    Nonlocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Auto,
    ClosedForm,
    FiniteDifference,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Auto => Backend::Auto,
            BackendArg::ClosedForm => Backend::ClosedFormKernel,
            BackendArg::FiniteDifference => Backend::FiniteDifference,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    KernelMass,
    Gamma,
    Prop1,
    Holder,
    Gronwall,
    Residual,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::KernelMass => "kernel-mass",
            Suite::Gamma => "gamma",
            Suite::Prop1 => "prop1",
            Suite::Holder => "holder",
            Suite::Gronwall => "gronwall",
            Suite::Residual => "residual",
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct SolveArgs {
    /// Scenario file (TOML).
    pub config: PathBuf,
    /// Output directory; defaults to $HYBRID_OUT_DIR, then `hybrid-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sensing mode; defaults to the config's `nonlocal_delta` setting.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Sensing radius for nonlocal mode.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Final time; defaults to the config horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Path grid step.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub backend: BackendArg,
    /// Worker threads for field evaluation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Clone, Debug, Args)]
pub struct GridArgs {
    /// Snapshot times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub field_times: Vec<f64>,
    /// Half width of the exported box; dimension default when omitted.
    #[arg(long = "box")]
    pub half_width: Option<f64>,
    /// Grid spacing; dimension default when omitted.
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Clone, Debug, Args)]
pub struct FieldExportArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suites to run, comma separated; all when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<Suite>,
    /// Sample count; each suite has its own default.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Relative slack on bound ratios.
    #[arg(long, default_value_t = hybrid_core::verify::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Run the falsification control instead: understated constants or a
    /// perturbed path, which must fail.
    #[arg(long)]
    pub falsify: bool,
}

#[derive(Clone, Debug, Args)]
pub struct BoundsArgs {
    pub config: PathBuf,
    /// Write the document here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Radius of E_R; the config radius when omitted.
    #[arg(long)]
    pub radius: Option<f64>,
}
