//! `routemix` — trajectory latent factor modeling from the command line.
//!
//! Subcommands cover the whole pipeline: `ingest` raw passage records into a
//! corpus, `train` a model, `evaluate` with cross-validation, `predict` next
//! locations for a prefix, `simulate` synthetic corpora, `inspect` fitted
//! factors, and `sweep` a parameter across values.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. Every run
//! that produces a file also writes a `<output>.manifest` recording the
//! effective configuration, seeds, and input/output checksums.

mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{evaluate, ingest, inspect, predict, simulate, sweep, train};

#[derive(Parser)]
#[command(name = "routemix", version, about = "Latent factor modeling of traffic trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw records, segment trajectories, and write a corpus file.
    Ingest(ingest::IngestArgs),
    /// Fit a model to a corpus with collapsed Gibbs sampling.
    Train(train::TrainArgs),
    /// Cross-validated coherence and next-location prediction scores.
    Evaluate(evaluate::EvaluateArgs),
    /// Rank next locations for a prefix of records under a trained model.
    Predict(predict::PredictArgs),
    /// Sample a synthetic corpus (and optionally its generating model).
    Simulate(simulate::SimulateArgs),
    /// Print a trained model's top sequences, objects, and time bins.
    Inspect(inspect::InspectArgs),
    /// Re-run evaluation across a list of parameter values.
    Sweep(sweep::SweepArgs),
}

/// Errors split by exit code: usage problems (1) versus data problems (2).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<routemix::Error> for CliError {
    fn from(err: routemix::Error) -> Self {
        use routemix::Error::*;
        match err {
            Config(_) | Argument(_) => CliError::Usage(err.to_string()),
            Record { .. } | TrajectoryTooShort { .. } | EmptyCorpus | Format { .. } | Io(_) => {
                CliError::Data(err.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => ingest::run(args),
        Command::Train(args) => train::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Predict(args) => predict::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Inspect(args) => inspect::run(args),
        Command::Sweep(args) => sweep::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
