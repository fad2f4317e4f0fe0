//! Command-line front end: configuration parsing and the batch subcommands.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_compare, cmd_gradcheck, cmd_simulate, cmd_sweep, cmd_train};
pub use config::{parse_config, render_config, RawConfig, RunConfig};
pub use error::CliError;
