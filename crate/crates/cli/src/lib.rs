//! Library half of the `sgm` command: argument definitions, CSV ingestion
//! and the four commands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod ingest;

pub use commands::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        file: String,
        line: u64,
        column: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] sgm::Error),
    #[error("run file: {0}")]
    Replay(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sgm", version, about = "Sufficient graphical model estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the graph of a CSV dataset.
    Estimate(EstimateArgs),
    /// Draw a dataset from a simulation model.
    Simulate(SimulateArgs),
    /// Replicate a simulation model and report ROC/AUC per method.
    Evaluate(EvaluateArgs),
    /// Diagnostics for a single pair.
    Score(ScoreArgs),
}

#[derive(Debug, Args, Clone)]
pub struct TuningArgs {
    /// Dimension of each sufficient predictor.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Relative regularizer: `auto` for GCV or a positive number.
    #[arg(long, default_value = "auto")]
    pub eps: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Input CSV; taken from the run file when replaying.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// `sgm` or `naive`.
    #[arg(long, default_value = "sgm")]
    pub method: String,
    /// Edge threshold: `auto` for GCV or a number.
    #[arg(long, default_value = "auto")]
    pub rho: String,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Repeat the run recorded in this run.json.
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model number, 1 to 5.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Node count of the hub models.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Comma-separated methods.
    #[arg(long, default_value = "sgm,naive")]
    pub method: String,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// First variable, 1-based.
    #[arg(long)]
    pub i: usize,
    /// Second variable, 1-based.
    #[arg(long)]
    pub j: usize,
    #[arg(long, default_value = "sgm")]
    pub method: String,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Also write run.json to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
