use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use weavelane::config::parse_inflow;

mod commands;
mod rundir;

/// Exit codes.
const USAGE: u8 = 2;
const DATA: u8 = 3;
const RUNTIME: u8 = 4;

#[derive(Debug)]
pub enum Fail {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Usage(_) => USAGE,
            Fail::Data(_) => DATA,
            Fail::Runtime(_) => RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Usage(m) | Fail::Data(m) | Fail::Runtime(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "weavelane", version, about = "Train and evaluate cooperative lane-change policies at a freeway weaving area")]
pub struct Cli {
    /// TOML run config; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed (default: the config's `seed`, 1 unless set).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Evaluation episodes (default 30).
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Inflow per lane: no_congestion, moderate, extreme or a rate in veh/h/lane.
    #[arg(long, global = true, value_parser = parse_inflow)]
    pub inflow: Option<f64>,
    /// Parallel workers; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Rl,
    Baseline,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Rl => "rl",
            PolicyKind::Baseline => "baseline",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Train a shared policy with PPO.
    Train {
        /// Stop after this many iterations (overrides train.iterations).
        #[arg(long)]
        max_iterations: Option<u64>,
        /// Continue from a checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run evaluation episodes and write metrics, logs and diagrams.
    Evaluate {
        #[arg(long, value_enum, default_value_t = PolicyKind::Rl)]
        policy: PolicyKind,
        /// Checkpoint of the policy to evaluate (required for `--policy rl`).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Same as `evaluate --policy baseline`.
    Baseline,
    /// Compare baseline and RL evaluation runs.
    Report {
        /// Run directories, classified by their recorded policy.
        dirs: Vec<PathBuf>,
        /// Force a directory to count as the baseline.
        #[arg(long)]
        baseline: Vec<PathBuf>,
        /// Force a directory to count as the controlled run.
        #[arg(long)]
        rl: Vec<PathBuf>,
    },
    /// Re-render diagrams from the logs in run directories.
    Plot { dirs: Vec<PathBuf> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
