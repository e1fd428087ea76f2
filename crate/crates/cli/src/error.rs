use std::io;
use std::path::Path;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_BAD_ARGS: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Args(String),
    #[error(transparent)]
    Core(#[from] simraw::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn csv(path: impl AsRef<Path>, source: csv::Error) -> Self {
        CliError::Csv {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Args(_) => EXIT_BAD_ARGS,
            CliError::Core(simraw::Error::Divergence { .. }) => EXIT_DIVERGED,
            CliError::Core(simraw::Error::Parameter(_)) => EXIT_BAD_ARGS,
            CliError::Core(_) | CliError::Io { .. } | CliError::Csv { .. } | CliError::Data(_) => EXIT_DATA,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
