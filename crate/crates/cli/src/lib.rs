//! Command-line runner: `nbmf fit|eval|tune|report --config run.toml`.
//!
//! Exit codes are 0 on success, 1 on runtime or numerical failure and 2 on a
//! configuration error.

pub mod config;
pub mod error;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Mode, Overrides, RunConfig};
pub use error::{CliError, EXIT_CONFIG, EXIT_RUNTIME};
pub use run::{execute, Console, StdConsole};

#[derive(Debug, Parser)]
#[command(name = "nbmf", version, about = "Nonnegative binary matrix factorization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the fit seed and the tune base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for tuning.
    #[arg(long, global = true, env = "NBMF_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Train on the train mask and write the factors.
    Fit,
    /// Score saved factors on the validation and test masks.
    Eval,
    /// Grid search over (K, alpha, beta) and multi-restart test evaluation.
    Tune,
    /// Summarize the artifacts in the output directory.
    Report,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Self {
        match c {
            Command::Fit => Mode::Fit,
            Command::Eval => Mode::Eval,
            Command::Tune => Mode::Tune,
            Command::Report => Mode::Report,
        }
    }
}

pub fn run_cli(cli: &Cli, console: &mut dyn Console) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    if cli.jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
    };
    let cfg = RunConfig::load(path, cli.command.into(), &overrides)?;
    execute(&cfg, cli.jobs, console)
}
