//! Command-line driver: config handling, artifact output and the commands.

mod args;
mod commands;
pub mod config;
pub mod output;

pub use args::{Cli, Command, CommonArgs};
pub use config::RunConfig;
pub use output::{ArtifactEntry, Manifest};

use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Process exit status classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Bad flags or config; exit code 2.
    Usage,
    /// Failure while running; exit code 1.
    Runtime,
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Runtime,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::runtime(format!("i/o error on {}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => 2,
            ErrorKind::Runtime => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<odrop_core::Error> for CliError {
    fn from(e: odrop_core::Error) -> Self {
        use odrop_core::Error as E;
        match e {
            E::Schema(_) | E::MissingColumn(_) | E::FormatVersion { .. } | E::Parse { .. } => {
                CliError::usage(e.to_string())
            }
            _ => CliError::runtime(e.to_string()),
        }
    }
}

/// Runs a parsed command line and returns the manifest it wrote.
pub fn run(cli: Cli) -> Result<Manifest, CliError> {
    commands::dispatch(cli)
}
