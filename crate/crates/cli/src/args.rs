use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::OUT_ENV;

#[derive(Debug, Parser)]
#[command(
    name = "forklab",
    version,
    about = "Simulate forking attacks on space-based chain selection rules"
)]
pub struct Cli {
    /// JSON experiment config. Flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = OUT_ENV)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play one game and write its transcript.
    Run(RunArgs),
    /// Play every (point, rule, strategy) combination and write a CSV.
    Sweep(SweepArgs),
    /// Print the closed-form fork bounds for a parameter grid.
    Bounds(BoundsArgs),
    /// Write the universal profile pair as CSV and SVG.
    Profiles(ProfilesArgs),
    /// Re-execute a transcript and check every recorded value.
    Replay(ReplayArgs),
}

/// Parameter axes. Each takes a comma separated list.
#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long, value_delimiter = ',')]
    pub phi: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<u32>>,
    /// Initial adversarial space (default 1/phi).
    #[arg(long)]
    pub a0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Chain selection rule, e.g. `weight`, `genesis:k=3`, `tent:delta=1.5`.
    #[arg(long = "rule")]
    pub rules: Option<Vec<String>>,
    /// Adversary, e.g. `universal:direction=s`, `grid-search:max_fork=8`.
    #[arg(long = "strategy")]
    pub strategies: Option<Vec<String>>,
    /// Transcript path (default `<out>/transcript.log`).
    #[arg(long, value_name = "FILE")]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Repeat for several rules.
    #[arg(long = "rule")]
    pub rules: Option<Vec<String>>,
    /// Repeat for several strategies.
    #[arg(long = "strategy")]
    pub strategies: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Window size for the genesis bound column.
    #[arg(long)]
    pub genesis_k: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ProfilesArgs {
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub transcript: PathBuf,
}
