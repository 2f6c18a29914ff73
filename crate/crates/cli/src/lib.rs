//! Command-line front end: experiment configuration and the subcommands
//! behind the `pisco` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use config::ExperimentConfig;
pub use error::CliError;
