use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Model or solver parameters are inconsistent.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// The request is well formed but exceeds what this implementation will enumerate.
    #[error("capability error: {0}")]
    Capability(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("rate cache audit failed: {0}")]
    Audit(String),
    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
