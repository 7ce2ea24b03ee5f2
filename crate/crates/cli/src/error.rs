use std::fmt::Display;
use std::path::Path;

use thiserror::Error;

/// Failure of one invocation, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs, unwritable outputs.
    #[error("{0}")]
    Usage(String),
    /// Inputs parsed but the computation is undefined for them.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

pub fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn domain(e: impl Display) -> CliError {
    CliError::Domain(e.to_string())
}

pub fn input(path: &Path, e: impl Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}
