//! `murzim` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.

mod args;
mod commands;

use args::Cli;
use clap::Parser;
use murzim::attribute_score::ScoreError;
use murzim::bundle::BundleError;
use murzim::data::DataError;
use murzim::train::CheckpointError;
use std::process::ExitCode;

/// Errors raised by the front end itself, tagged with their exit class.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

const USAGE: u8 = 1;
const DATA: u8 = 2;
const RUNTIME: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Usage(_) => USAGE,
                Failure::Data(_) => DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<DataError>() {
            return match e {
                DataError::MissingColumn(_) | DataError::UnknownAttributeName(_) => USAGE,
                _ => DATA,
            };
        }
        if cause.is::<BundleError>() || cause.is::<CheckpointError>() || cause.is::<ScoreError>() {
            return DATA;
        }
        if cause.is::<std::io::Error>() {
            return DATA;
        }
    }
    RUNTIME
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
