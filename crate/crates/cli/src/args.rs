use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sampled_card_core::sim::tables::TableId;
use sampled_card_core::{Algorithm, FrequencyModel};

#[derive(Debug, Parser)]
#[command(
    name = "sampled-card",
    version,
    about = "Distinct-count estimation for sampled streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the cardinality of the unsampled stream from a sampled one.
    Estimate(EstimateArgs),
    /// Run a reproduction experiment and print it as CSV.
    Simulate(SimulateArgs),
    /// Evaluate the analytic unseen-mass moments and relative variance.
    Analyze(AnalyzeArgs),
    /// Split a storage budget between sketch registers and reservoir slots.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Alg1,
    Alg2,
    Naive,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Alg1 => Algorithm::Alg1,
            AlgorithmArg::Alg2 => Algorithm::Alg2,
            AlgorithmArg::Naive => Algorithm::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One UTF-8 token per line.
    Text,
    /// One JSON value per line; strings hash by content, other values by
    /// their compact serialization.
    Ndjson,
    /// Little-endian 64-bit unsigned records.
    #[value(name = "binary-u64")]
    BinaryU64,
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let rate: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if rate > 0.0 && rate <= 1.0 {
        Ok(rate)
    } else {
        Err(format!("sampling rate must lie in (0, 1], got {rate}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

fn parse_model(s: &str) -> Result<FrequencyModel, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_table(s: &str) -> Result<TableId, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Input file; stdin when absent or `-`.
    #[arg(long, short)]
    pub input: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "alg1")]
    pub algorithm: AlgorithmArg,

    /// Sketch registers (power of two, 16..=65536).
    #[arg(long, default_value_t = 1024)]
    pub m: usize,

    /// Reservoir capacity for alg2.
    #[arg(long, default_value_t = 1024)]
    pub u: usize,

    /// Rate the input was sampled at. Enables the predicted relative variance.
    #[arg(long, value_parser = parse_rate)]
    pub sampling_rate: Option<f64>,

    /// Frequency model for the predicted variance; without it the prediction
    /// plugs in the sample's own Good-Turing estimates.
    #[arg(long, value_parser = parse_model)]
    pub freq_model: Option<FrequencyModel>,

    /// Asymptotic relative efficiency of the sketch in the alg2 prediction.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub are: f64,

    #[arg(long, value_enum, default_value = "text")]
    pub format: InputFormat,

    #[arg(long, env = "SAMPLED_CARD_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One of intro, 1a, 1b, 2a, 2b, 3, 4a, 4b, hll.
    #[arg(long, value_parser = parse_table)]
    pub table: TableId,

    /// Trials per row; defaults to 200 (50 with --fast).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: Option<u32>,

    #[arg(long, env = "SAMPLED_CARD_SEED", default_value_t = 0)]
    pub seed: u64,

    /// n = 1000 distinct elements and 50 trials.
    #[arg(long)]
    pub fast: bool,

    /// ARE for the analytic column and the optimizer.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub are: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_parser = parse_model)]
    pub freq_model: FrequencyModel,

    /// Distinct elements; sets the expected sample length when --l is absent.
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,

    #[arg(long, value_parser = parse_rate)]
    pub sampling_rate: f64,

    #[arg(long, value_parser = parse_positive)]
    pub m: f64,

    /// Reservoir size: evaluates the subsampled (alg2) variance.
    #[arg(long, value_parser = parse_positive, conflicts_with = "l")]
    pub u: Option<f64>,

    /// Sample length: evaluates the exact-tally (alg1) variance.
    #[arg(long, value_parser = parse_positive)]
    pub l: Option<f64>,

    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub are: f64,

    /// Use binomial `(1-P)^f` terms instead of the `e^{-Pf}` limit.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub budget: u64,

    #[arg(long, value_parser = parse_model)]
    pub freq_model: FrequencyModel,

    #[arg(long, value_parser = parse_rate)]
    pub sampling_rate: f64,

    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub are: f64,
}
