use std::path::PathBuf;

use thiserror::Error;

/// Runner errors, each mapped to a distinct process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Symbol(szego_core::Error),

    #[error("positivity violation: {0}")]
    Positivity(String),

    #[error("{0}")]
    CapExceeded(szego_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Core(szego_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Symbol(_) => 2,
            CliError::Positivity(_) => 3,
            CliError::CapExceeded(_) => 4,
            CliError::Io(_) => 5,
            CliError::Core(_) => 6,
        }
    }
}

impl From<szego_core::Error> for CliError {
    fn from(e: szego_core::Error) -> Self {
        match e {
            szego_core::Error::SymbolFile { .. } => CliError::Symbol(e),
            szego_core::Error::CapExceeded { .. } => CliError::CapExceeded(e),
            szego_core::Error::NonPositive { .. } => CliError::Positivity(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

/// Exit code for a run whose invariants did not all pass.
pub const EXIT_INVARIANT_FAILURE: i32 = 1;
