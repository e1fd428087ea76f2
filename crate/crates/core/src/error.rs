use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("size error: expected {expected} payload bytes, found {found}")]
    Size { expected: usize, found: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("rank-deficient design: {0}")]
    Rank(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("optimization diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
