//! Command-line front end: configuration, dispatch and result files.

pub mod commands;
pub mod config;
pub mod document;

pub use commands::{execute, run_command, Cli, CliError, Outcome, OUTPUT_DIR_ENV};
pub use config::{load_config, ConfigError, RunConfig};
pub use document::{read_json, write_results, OutputError, ResultDocument, Table};
