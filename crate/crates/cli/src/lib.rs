//! Experiment runner for value-aggregation loops: single runs, parameter
//! sweeps, the verification suite and log-log plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod summary;
pub mod svg;

pub use error::{CliError, CliResult};
