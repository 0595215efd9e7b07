//! Command-line front end: configuration files, scenario runs and report files.

pub mod config;
mod run;
mod selftest;

pub use config::{parse_config, serialize_config, ConfigError};
pub use run::{run, Cli, CliError, Command, MechanismArg, ModeArg};
pub use selftest::{selftest, Check};
