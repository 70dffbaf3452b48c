use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "omp-lab",
    version,
    about = "Exact-recovery bounds and Monte Carlo experiments for orthogonal matching pursuit",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the disparity-aware and baseline recovery bounds.
    Bound(BoundArgs),
    /// Run the Monte Carlo recovery experiment.
    Simulate(SimulateArgs),
    /// Estimate how often Gaussian vectors satisfy the disparity condition.
    #[command(name = "validate-phi")]
    ValidatePhi(ValidatePhiArgs),
    /// Tabulate and plot phi(t) for several alpha.
    #[command(name = "plot-phi")]
    PlotPhi(PlotPhiArgs),
    /// Merge earlier CSV outputs into combined plots.
    Report(ReportArgs),
}

impl Command {
    /// Section name in a config file.
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bound(_) => "bound",
            Command::Simulate(_) => "simulate",
            Command::ValidatePhi(_) => "validate-phi",
            Command::PlotPhi(_) => "plot-phi",
            Command::Report(_) => "report",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Bound(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::ValidatePhi(a) => &a.common,
            Command::PlotPhi(a) => &a.common,
            Command::Report(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Directory for output files (created if missing).
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Comma-separated subset of csv,json,svg.
    #[arg(long)]
    pub formats: Option<String>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,

    /// TOML file with one section per subcommand; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiChoice {
    Cs,
    Decay,
    Gauss,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Measurement count(s), comma-separated.
    #[arg(long)]
    pub m: Option<String>,

    /// Range of m as lo:step:hi.
    #[arg(long)]
    pub m_sweep: Option<String>,

    #[arg(long, default_value_t = 1024)]
    pub n: usize,

    #[arg(long = "K", default_value_t = 15)]
    pub k: usize,

    #[arg(long, value_enum, default_value = "cs")]
    pub phi: PhiChoice,

    /// Decay factor for --phi decay.
    #[arg(long)]
    pub alpha: Option<f64>,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub m: Option<String>,

    #[arg(long)]
    pub m_sweep: Option<String>,

    #[arg(long, default_value_t = 1024)]
    pub n: usize,

    /// Sparsity level(s), comma-separated.
    #[arg(long = "K", default_value = "15")]
    pub k: String,

    /// Signal case(s): flat, decay11, decay12, gauss (comma-separated).
    #[arg(long, default_value = "flat")]
    pub case: String,

    #[arg(long, default_value_t = 1000)]
    pub trials: u64,

    #[arg(long, env = "OMP_LAB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Exact-recovery threshold on ||x_hat - x||_2.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,

    /// Log and skip failing trials instead of aborting.
    #[arg(long)]
    pub skip_errors: bool,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidatePhiArgs {
    #[arg(long, default_value_t = 50)]
    pub t_max: usize,

    #[arg(long, default_value_t = 50_000)]
    pub trials: u64,

    #[arg(long, env = "OMP_LAB_SEED", default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value = "gauss")]
    pub phi: PhiChoice,

    #[arg(long)]
    pub alpha: Option<f64>,

    /// Exit with status 3 when the smallest probability is below this.
    #[arg(long, default_value_t = 0.995)]
    pub threshold: f64,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlotPhiArgs {
    /// Decay factors, comma-separated; 1 stands for phi(t) = t.
    #[arg(long, default_value = "1,1.5,2,2.5")]
    pub alpha: String,

    #[arg(long, default_value_t = 1)]
    pub t_min: usize,

    #[arg(long, default_value_t = 50)]
    pub t_max: usize,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// CSV files written by `simulate` or `bound`, comma-separated.
    #[arg(long)]
    pub inputs: String,

    #[command(flatten)]
    pub common: CommonArgs,
}
