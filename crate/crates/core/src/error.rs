use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("non-finite value {what} at {location}")]
    NonFinite { what: &'static str, location: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: u64, loss: f64 },
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("unsupported version {found} in {what} (expected {expected})")]
    Version { what: String, found: u32, expected: u32 },
    #[error("cannot decode {}: {reason}", .path.display())]
    Decode { path: PathBuf, reason: String },
    #[error("malformed {what}: {reason}")]
    Format { what: String, reason: String },
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => ErrorKind::Config,
            Error::NonFinite { .. } | Error::Diverged { .. } => ErrorKind::Numeric,
            Error::DimensionMismatch(_)
            | Error::MissingFile(_)
            | Error::Version { .. }
            | Error::Decode { .. }
            | Error::Format { .. }
            | Error::Io { .. } => ErrorKind::Io,
        }
    }

    /// Stable snake_case identifier of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config(_) => "config",
            Error::NonFinite { .. } => "non_finite",
            Error::Diverged { .. } => "diverged",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::MissingFile(_) => "missing_file",
            Error::Version { .. } => "version",
            Error::Decode { .. } => "decode",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
