use std::path::PathBuf;

/// Errors raised by the harness.
///
/// Variants are grouped so that front ends can map them onto exit codes:
/// bad arguments, bad data, and failures while running an experiment.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input files, schema violations, inconsistent datasets.
    #[error("{0}")]
    Data(String),
    /// A parameter outside its documented domain.
    #[error("{0}")]
    InvalidArgument(String),
    /// Training diverged or another run-time failure.
    #[error("{0}")]
    Runtime(String),
}

/// Coarse error category, stable across variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Runtime,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::Io { .. } | Error::Data(_) => ErrorKind::Data,
            Error::Runtime(_) => ErrorKind::Runtime,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
