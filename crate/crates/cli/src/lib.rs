//! Orchestration for the photonic Hopfield simulator: configuration,
//! persistence and the `phopfield` subcommands.

pub mod commands;
pub mod config;
mod error;
pub mod manifest;
pub mod store;

pub use config::{LambdaMode, LadderConfig, Preset, RunConfig};
pub use error::{CliError, CliResult};
