//! Configuration, orchestration and CSV artifacts for the `wkb` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{execute, Command, Outcome};
pub use config::{parse_config, RunConfig};
pub use error::CliError;
