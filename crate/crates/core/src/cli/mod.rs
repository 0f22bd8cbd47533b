//! Command-line front end: configuration files and experiment commands.

pub mod commands;
pub mod config;

pub use commands::{CliError, Table, ValidationReport};
pub use config::{ConfigError, ExperimentConfig};
