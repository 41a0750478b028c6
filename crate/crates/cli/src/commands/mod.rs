mod context;
mod diagnose;
mod estimate;
mod experiment;
mod simulate;

use std::path::PathBuf;

pub use context::{Manifest, RunRecord};
pub use diagnose::DiagnosticsReport;
pub use experiment::ExperimentReport;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    Experiment,
    Diagnose,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Experiment => "experiment",
            Command::Diagnose => "diagnose",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub no_timestamp: bool,
    /// Count file for `estimate`, overriding the config's `counts`.
    pub counts: Option<PathBuf>,
}

/// What a command produced.
#[derive(Clone, Debug)]
pub struct Summary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub message: String,
}

pub fn run(command: Command, opts: &RunOptions) -> Result<Summary, CliError> {
    let ctx = context::Context::new(command, opts)?;
    match command {
        Command::Simulate => simulate::run(ctx),
        Command::Estimate => estimate::run(ctx, opts),
        Command::Experiment => experiment::run(ctx),
        Command::Diagnose => diagnose::run(ctx),
    }
}
