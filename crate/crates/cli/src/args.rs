use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pdmo", version, about = "Adaptive primal-dual gradient methods with duality-gap certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem and write trace.csv and summary.json.
    Run(RunArgs),
    /// Generate a problem file.
    Gen(GenArgs),
    /// Recompute the certificate of a finished run.
    Verify(VerifyArgs),
    /// Fit convergence slopes over a range of iteration counts.
    VerifyRates(RatesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Qp,
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Gd,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProxChoice {
    /// Entropy on the simplex, Euclidean elsewhere.
    Auto,
    Euclidean,
    Entropy,
}

/// Where the problem comes from.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Problem JSON file.
    #[arg(long, conflicts_with = "gen")]
    pub problem: Option<PathBuf>,
    /// Built-in generator.
    #[arg(long, value_enum)]
    pub gen: Option<GenKind>,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub rows: usize,
    #[arg(long, default_value_t = 3)]
    pub cols: usize,
    /// Condition number of generated QPs.
    #[arg(long, default_value_t = 10.0)]
    pub condition: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Algo::Fast)]
    pub algo: Algo,
    #[arg(long = "L0", default_value_t = 1.0)]
    pub l0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// zero, half-eps, fast-scaled, or const:VALUE.
    #[arg(long, default_value = "zero")]
    pub delta: String,
    /// Inject bounded oracle noise of this size.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_enum, default_value_t = ProxChoice::Auto)]
    pub prox: ProxChoice,
    /// Stop once the certified gap is at most eps.
    #[arg(long)]
    pub early_stop: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Output directory.
    #[arg(long, default_value = "pdmo-run")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: ProblemArgs,
    /// Problem file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the reference solution here.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Directory written by `run`.
    pub dir: PathBuf,
    /// Slack allowed in gap <= bound.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub source: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated iteration counts.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128,256")]
    pub ns: Vec<usize>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
