//! Command-line front end: configuration, experiment orchestration and output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

pub use commands::{run, Command, RunOptions, Summary};
pub use config::ExperimentConfig;
pub use error::CliError;
