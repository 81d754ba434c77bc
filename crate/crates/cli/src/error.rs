use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Numeric(kernmoment::Error),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Wraps a failure to read or write `path`. Malformed file contents count
    /// as input errors, not numeric ones.
    pub fn at(path: &Path) -> impl FnOnce(kernmoment::Error) -> CliError + '_ {
        move |e| match e {
            kernmoment::Error::Io(_) | kernmoment::Error::Format(_) => {
                CliError::Io(format!("{}: {e}", path.display()))
            }
            other => CliError::Numeric(other),
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |e| CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<kernmoment::Error> for CliError {
    fn from(e: kernmoment::Error) -> Self {
        match e {
            kernmoment::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
