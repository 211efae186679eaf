//! `ecl`: feature ranking, encoder training, detection, baselines and benchmarks.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical
//! failure, 4 I/O failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use ecl_core::{Error, ErrorKind};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Parser, Debug)]
#[command(
    name = "ecl",
    version,
    about = "Contrastive LSTM anomaly detection for energy telemetry"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Rank features by absolute Pearson correlation with a target column.
    Features(FeaturesArgs),
    /// Train a contrastive encoder on one feature and write a checkpoint.
    Train(TrainArgs),
    /// Score window pairs (or windows against a reference set) with a trained encoder.
    Detect(DetectArgs),
    /// Run the k-means or rolling-skewness baseline on one feature.
    Baseline(BaselineArgs),
    /// Compare methods across features and seeds and write a report directory.
    Bench(BenchArgs),
    /// Write a labeled synthetic dataset.
    Generate(GenerateArgs),
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// JSON config file (flat keys, same names as the flags)
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Input CSV with a timestamp column and numeric feature columns
    #[arg(long)]
    input: Option<PathBuf>,
    /// Timestamp column name (auto-detected when absent)
    #[arg(long)]
    timestamp_column: Option<String>,
    /// Fill missing cells with the previous value instead of failing
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    forward_fill: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SeedArg {
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    /// Adam learning rate
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Contrastive margin
    #[arg(long)]
    margin: Option<f64>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Pairs per Adam step
    #[arg(long)]
    batch_size: Option<usize>,
    /// Window length in samples
    #[arg(long)]
    window: Option<usize>,
    /// Window stride in samples
    #[arg(long)]
    stride: Option<usize>,
    /// Embedding size
    #[arg(long)]
    embedding_size: Option<usize>,
    /// LSTM hidden units
    #[arg(long)]
    hidden_size: Option<usize>,
    /// Windows whose starts differ by at most this are similar
    #[arg(long)]
    positive_max_lag: Option<usize>,
    /// Windows whose starts differ by at least this may be dissimilar
    #[arg(long)]
    negative_min_gap: Option<usize>,
    /// Dissimilar pairs drawn per similar pair
    #[arg(long)]
    negatives_per_positive: Option<usize>,
    /// Train on similar pairs only when no dissimilar pair fits
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    allow_no_negatives: bool,
}

#[derive(Args, Debug, Serialize)]
struct ScoreArgs {
    /// Flag scores strictly above this
    #[arg(long)]
    threshold: Option<f64>,
    /// Pairs scored during detection
    #[arg(long, value_parser = ["similar", "all"])]
    pairs: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct BaselineSettings {
    /// Number of k-means clusters
    #[arg(long)]
    kmeans_k: Option<usize>,
    /// Lloyd iteration cap
    #[arg(long)]
    kmeans_max_iter: Option<usize>,
    /// Seeded k-means restarts; the lowest inertia wins
    #[arg(long)]
    kmeans_restarts: Option<usize>,
    /// Centroid-distance quantile above which windows are flagged
    #[arg(long)]
    flag_quantile: Option<f64>,
    /// Baseline window length in samples
    #[arg(long)]
    baseline_window: Option<usize>,
    /// Windows with |skewness| above this are flagged
    #[arg(long)]
    skewness_cutoff: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct FeaturesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Column to correlate against
    #[arg(long)]
    target: Option<String>,
    /// Number of features to keep
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Feature column to model
    #[arg(long)]
    feature: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug, Serialize)]
struct DetectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Checkpoint written by `ecl train`
    #[arg(long)]
    model: Option<PathBuf>,
    /// Score each window by its distance to the nearest window of this CSV instead of scoring pairs
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    score: ScoreArgs,
}

#[derive(Args, Debug, Serialize)]
struct BaselineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Feature column to score
    #[arg(long)]
    feature: Option<String>,
    /// Baseline method
    #[arg(long, value_parser = ["kmeans", "skewness"])]
    method: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    #[serde(flatten)]
    settings: BaselineSettings,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Synthetic scenario JSON; the built-in scenario is used when neither this nor --input is given
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated methods (contrastive, kmeans, skewness)
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated features; empty means --target/--k selection or every column
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Select features by correlation with this column
    #[arg(long)]
    target: Option<String>,
    /// Number of features to select with --target
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    score: ScoreArgs,
    #[command(flatten)]
    #[serde(flatten)]
    settings: BaselineSettings,
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    /// JSON config file
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Synthetic scenario JSON; the built-in scenario is used when absent
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Appends each flag's built-in default, taken from `CliConfig::default()`, to its help.
fn command() -> clap::Command {
    let defaults = config::default_strings();
    let mut cmd = Cli::command();
    let subs: Vec<String> = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    for sub in subs {
        cmd = cmd.mut_subcommand(&sub, |s| {
            // a repeated flag takes its last value
            let mut s = s.args_override_self(true);
            let ids: Vec<String> = s.get_arguments().map(|a| a.get_id().to_string()).collect();
            for id in ids {
                if let Some(v) = defaults.get(&id) {
                    let shown = config::render_default(v);
                    s = s.mut_arg(&id, |a| {
                        let help = a.get_help().map(|h| h.to_string()).unwrap_or_default();
                        a.help(format!("{help} [default: {shown}]"))
                    });
                }
            }
            s
        });
    }
    cmd
}

fn flags_of<T: Serialize>(args: &T) -> Map<String, Value> {
    match serde_json::to_value(args) {
        Ok(Value::Object(map)) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

fn run(cli: Cli) -> ecl_core::Result<()> {
    let (file, flags) = match &cli.command {
        Command::Features(a) => (a.common.config.clone(), flags_of(a)),
        Command::Train(a) => (a.common.config.clone(), flags_of(a)),
        Command::Detect(a) => (a.common.config.clone(), flags_of(a)),
        Command::Baseline(a) => (a.common.config.clone(), flags_of(a)),
        Command::Bench(a) => (a.common.config.clone(), flags_of(a)),
        Command::Generate(a) => (a.config.clone(), flags_of(a)),
    };
    let cfg = config::resolve(file.as_deref(), flags)?;
    match cli.command {
        Command::Features(_) => commands::features(&cfg),
        Command::Train(_) => commands::train(&cfg),
        Command::Detect(_) => commands::detect(&cfg),
        Command::Baseline(_) => commands::baseline(&cfg),
        Command::Bench(_) => commands::bench(&cfg),
        Command::Generate(_) => commands::generate(&cfg),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Input => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

fn main() -> ExitCode {
    let matches = command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
