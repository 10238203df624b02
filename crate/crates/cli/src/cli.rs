use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "ggm",
    version,
    about = "Gaussian graphical model selection with a Fisher-quantile penalty"
)]
pub struct Cli {
    /// Worker threads for simulation cells (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Flat `key = value` TOML file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the penalty pen(d) for d = 0..=dmax as CSV.
    PenTable(PenTableArgs),
    /// Select a graph for the observations in a CSV file.
    Estimate(EstimateArgs),
    /// Run the simulation benchmark (risk ratio, power, FDR).
    Simulate(SimulateArgs),
    /// Run the undersized-penalty overfitting experiment under theta = 0.
    Prop1(Prop1Args),
}

#[derive(Debug, Args)]
pub struct PenTableArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Penalty constant, must exceed 1 (default 2).
    #[arg(long = "K", alias = "k")]
    pub k: Option<f64>,
    #[arg(long)]
    pub dmax: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV with one observation per row; an optional header row is skipped.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// edges, deg, edges-directed or deg-directed (default deg-directed).
    #[arg(long)]
    pub family: Option<String>,
    /// Collection bound D (default 4).
    #[arg(long)]
    pub dmax: Option<usize>,
    #[arg(long = "K", alias = "k")]
    pub k: Option<f64>,
    /// exact-decomposed, exhaustive, stepwise or branch-and-bound.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Constant of the degree check, in (0, 1) (default 0.9).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Edge probability of the random graphs.
    #[arg(long, conflicts_with = "s")]
    pub q: Option<f64>,
    /// Sparsity index; sets q = s / p.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub graphs: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long = "K", alias = "k")]
    pub k: Option<f64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub dmax: Option<usize>,
    #[arg(long)]
    pub strategy: Option<String>,
    /// Comma-separated subset of `ours,mb`.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// analytic or replicate.
    #[arg(long)]
    pub oracle: Option<String>,
    /// Diagonal-dominance margin of the simulated precision matrices.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Level of the lasso baseline.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Edge rule of the lasso baseline: or, and.
    #[arg(long)]
    pub rule: Option<String>,
    /// Score the baseline by a least-squares refit on its graph (default true)
    /// or, when false, by the lasso coefficients.
    #[arg(long, value_name = "BOOL")]
    pub mb_refit: Option<bool>,
    /// Writes PREFIX.json and PREFIX_<method>.csv; JSON to standard output when absent.
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Prop1Args {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub dmax: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// K of the control run.
    #[arg(long = "K", alias = "k")]
    pub k: Option<f64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
