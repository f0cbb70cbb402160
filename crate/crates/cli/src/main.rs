//! `alframe`: frame filtering, acquisition, simulation and reporting.

mod cmd;
mod error;
mod txn;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "alframe", version, about = "Active-learning frame selection for video segmentation datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drop blurry and near-duplicate frames from a manifest.
    Preprocess(cmd::preprocess::Args),
    /// Score one video's unlabeled frames without touching the pool state.
    Score(cmd::score::Args),
    /// Select the next round's frames and advance the pool state.
    Select(cmd::select::Args),
    /// Run the synthetic strategy comparison.
    Simulate(cmd::simulate::Args),
    /// Render comparison tables from round logs.
    Report(cmd::report::Args),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Preprocess(a) => cmd::preprocess::run(a),
        Command::Score(a) => cmd::score::run(a),
        Command::Select(a) => cmd::select::run(a),
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Report(a) => cmd::report::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
