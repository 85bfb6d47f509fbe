//! Command line driver for forklab: runs games, parameter sweeps, bound
//! tables and profile plots, and replays transcripts.

pub mod args;
pub mod commands;
pub mod config;
pub mod svg;

use std::io::Write;

use thiserror::Error;

pub use args::{Cli, Command};
use commands::Session;
use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or spec strings.
    #[error("{0}")]
    Usage(String),
    /// The experiment itself failed.
    #[error("{0:#}")]
    Run(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out_dir = config::output_dir(cli.out.as_deref(), &config);
    let session = Session { config, out_dir };
    match &cli.command {
        Command::Run(a) => commands::run(&session, a, stdout, stderr),
        Command::Sweep(a) => commands::sweep(&session, a, stdout, stderr),
        Command::Bounds(a) => commands::bounds(&session, a, stdout, stderr),
        Command::Profiles(a) => commands::profiles(&session, a, stdout, stderr),
        Command::Replay(a) => commands::replay(a, stdout),
    }
}
