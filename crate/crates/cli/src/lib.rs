//! Configuration, orchestration and certificate persistence for the `cvqkd` binary.

pub mod certificate;
pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};
