use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "spotvol", version, about = "Spot volatility inference for pure-jump semimartingales")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for every random quantity (paths, reference samples, quantile tables).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Upper bound on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for persisted quantile tables; overrides SPOTVOL_CACHE_DIR.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path of the model and write it as CSV files plus a JSON sidecar.
    Simulate(SimulateArgs),
    /// Block-wise spot volatility estimates.
    Estimate(EstimateArgs),
    /// Estimate the jump activity index.
    Beta(BetaArgs),
    /// Per-block confidence intervals.
    Ci(CiArgs),
    /// Finite-sample vs limit distribution experiment.
    Histogram(ExperimentArgs),
    /// Interval coverage experiment.
    Coverage(ExperimentArgs),
    /// Build and persist quantile tables.
    QuantileCache(CacheArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV of prices or increments, with or without a time column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKindArg::Auto)]
    pub input_kind: InputKindArg,
    /// Observation mesh; required when the file has no time column.
    #[arg(long)]
    pub delta_n: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputKindArg {
    Auto,
    Price,
    Increment,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Model configuration (JSON); defaults to the standard two-factor model.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Activity index of the standard model (ignored with --config).
    #[arg(long, default_value_t = 1.6)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    /// File name stem of the written series.
    #[arg(long, default_value = "path")]
    pub stem: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    FixedK,
    FixedKDiff,
    LargeK,
    LargeKDiff,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = EstimatorArg::FixedK)]
    pub method: EstimatorArg,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Activity index; needed by the normalised large-k estimators.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaMethodArg {
    ThresholdCount,
    TwoScalePv,
    SecondDiffPv,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = BetaMethodArg::SecondDiffPv)]
    pub method: BetaMethodArg,
    /// Power of the power-variation methods.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Threshold exponent of the counting method.
    #[arg(long, default_value_t = 0.2)]
    pub varpi: f64,
    /// Absolute threshold multipliers; data-adaptive when absent.
    #[arg(long, requires = "eta_prime")]
    pub eta: Option<f64>,
    #[arg(long, requires = "eta")]
    pub eta_prime: Option<f64>,
    /// Output JSON (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CiMethodArg {
    FixedK,
    FixedKDiff,
    LargeKGauss,
    LargeKGaussDiff,
    LargeKStable,
    LargeKStableDiff,
    Boundary,
    BoundaryDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    Hdi,
    EqualTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Log,
    Identity,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub method: CiMethodArg,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Known activity index. Without it β is estimated from the input by the
    /// second-difference power variation (p = 0.5) and rounded to the table grid.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Bound selection; defaults to hdi for fixed-k and equal-tail for stable limits.
    #[arg(long, value_enum)]
    pub bound: Option<BoundArg>,
    /// Transform of the large-k intervals.
    #[arg(long, value_enum, default_value_t = TransformArg::Log)]
    pub transform: TransformArg,
    /// Monte Carlo size of the quantile tables.
    #[arg(long, default_value_t = spotvol::inference::DEFAULT_TABLE_SIZE)]
    pub table_size: usize,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Experiment configuration (JSON); defaults to the standard β = 1.6 design.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the full replication count instead of the desk-scale default.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[arg(long, value_enum, default_value_t = CiMethodArg::FixedK)]
    pub method: CiMethodArg,
    /// Activity indices, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Block size (fixed-k tables only).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = spotvol::inference::DEFAULT_TABLE_SIZE)]
    pub table_size: usize,
    /// Level at which bounds are reported.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
}
