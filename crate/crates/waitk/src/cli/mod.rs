//! Command-line surface: subcommands `data`, `train`, `average`,
//! `simulate`, `evaluate`, `curve`, plus the checkpoint and report file
//! formats they exchange. Exit codes: 0 success, 1 usage, 2 data error,
//! 3 numeric failure.

mod checkpoint;
mod commands;
mod config_file;
mod manifest;
mod report;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use commands::average::{cmd_average, AverageArgs};
pub use commands::curve::{cmd_curve, CurveArgs, CurveSummary};
pub use commands::data::{cmd_data, DataCmd};
pub use commands::evaluate::{cmd_evaluate, EvaluateArgs};
pub use commands::simulate::{cmd_simulate, SimKRun, SimulateArgs, TraceLine};
pub use commands::train::{cmd_train, TrainArgs, TrainSummary};
pub use config_file::expand_config_args;
pub use manifest::write_manifest;
pub use report::{
    read_report_csv, read_report_json, short_hash, CurvePoint, Report, ReportMeta, SearchKind,
};

use crate::data::DataError;
use crate::metrics::MetricsError;
use crate::model::ModelError;
use crate::numerics::NumericsError;
use crate::stream::StreamError;
use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Numerics(NumericsError::NonFinite { op }) => {
                CliError::Numeric(format!("non-finite value in {op}"))
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Simultaneous wait-k translation at desk scale.
#[derive(Debug, Parser)]
#[command(name = "waitk", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus tooling: synth | learn-bpe | filter | sample | tag | distill
    Data {
        #[command(subcommand)]
        cmd: DataCmd,
    },
    /// Train a wait-k model (multi-path by default)
    Train(TrainArgs),
    /// Average checkpoints into one
    Average(AverageArgs),
    /// Stream-decode a test set at one or more k values
    Simulate(SimulateArgs),
    /// Score hypotheses and traces into a report
    Evaluate(EvaluateArgs),
    /// Merge evaluation reports into a latency-quality curve
    Curve(CurveArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Data { cmd } => cmd_data(&cmd),
        Command::Train(args) => cmd_train(&args).map(|_| ()),
        Command::Average(args) => cmd_average(&args),
        Command::Simulate(args) => cmd_simulate(&args).map(|_| ()),
        Command::Evaluate(args) => cmd_evaluate(&args).map(|_| ()),
        Command::Curve(args) => {
            let summary = cmd_curve(&args)?;
            if !summary.missing.is_empty() && summary.points.is_empty() {
                return Err(CliError::Data(format!(
                    "no usable reports among {} inputs",
                    summary.missing.len()
                )));
            }
            Ok(())
        }
    }
}
