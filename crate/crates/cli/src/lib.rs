//! Configuration ingestion, subcommand dispatch, and bit-stable
//! report emission for the retention lab.
//!
//! Exit-code discipline: 0 success, 1 configuration/usage error,
//! 2 runtime numerical or output-I/O error.

use std::fmt;

pub mod cli;
pub mod config;
pub mod report;

pub use cli::dispatch;

#[derive(Debug)]
pub enum CliError {
    /// Bad usage or configuration: exit code 1.
    Config(String),
    /// Numerical failure or output I/O failure: exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl From<lvrlab_core::Error> for CliError {
    fn from(err: lvrlab_core::Error) -> Self {
        match err {
            lvrlab_core::Error::Config { .. } | lvrlab_core::Error::Argument(_) => {
                CliError::Config(err.to_string())
            }
            _ => CliError::Runtime(err.to_string()),
        }
    }
}
