//! Experiment runner for distributed nonparametric sequential detection.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::execute;
pub use config::{parse_config, parse_str, Command, Format, HypothesisSel, Overrides, RunConfig};
pub use error::CliError;
