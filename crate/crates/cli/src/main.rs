//! `dynppe` command-line driver.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage or input error, 3 resource cap.

mod changes;
mod check;
mod embed;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dynppe::{Error, HashConfig, RunConfig, Segmentation};

#[derive(Debug, Parser)]
#[command(name = "dynppe", version, about = "Dynamic PPR embeddings for a tracked node subset")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Embed the tracked subset at every snapshot of an event stream.
    Embed(embed::EmbedArgs),
    /// Run the oracle-backed invariant checks on a small stream.
    Check(check::CheckArgs),
    /// Rank per-snapshot embedding movement by z-score.
    Changes(changes::ChangesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Dynppe,
    Commute,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Dynppe => "dynppe",
            Method::Commute => "commute",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    /// Edge-event file: `timestamp<TAB>op<TAB>u<TAB>v`.
    #[arg(long)]
    pub events: PathBuf,
    /// Cut a snapshot every N events instead of at `#snapshot` markers.
    #[arg(long, value_name = "N")]
    pub snapshot_every: Option<usize>,
}

impl StreamArgs {
    pub fn segmentation(&self) -> Segmentation {
        self.snapshot_every
            .map_or(Segmentation::Markers, Segmentation::Every)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Teleport probability.
    #[arg(long, default_value_t = 0.15)]
    pub alpha: f64,
    /// Error budget; the push threshold at snapshot t is epsilon / m_t.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Fraction of pushed residual kept at the pushed node.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u32,
    /// Worker threads; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

impl ConfigArgs {
    pub fn run_config(&self) -> Result<RunConfig, Error> {
        let cfg = RunConfig {
            alpha: self.alpha,
            epsilon: self.epsilon,
            beta: self.beta,
            hash: HashConfig::from_seed(self.dim, self.seed)?,
            parallelism: self.parallelism,
            ..RunConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Cap(String),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error(transparent)]
    Engine(#[from] Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Usage(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Engine(e) => {
                let mut inner = e;
                while let Error::Source { source, .. } = inner {
                    inner = source;
                }
                match inner {
                    Error::TooLarge { .. } | Error::BudgetExceeded { .. } => 3,
                    _ => 2,
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Embed(args) => embed::run(&args),
        Command::Check(args) => check::run(&args),
        Command::Changes(args) => changes::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynppe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
