use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the auralization library.
///
/// The variants are coarse on purpose: front ends map them onto exit codes
/// through [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("grid fingerprint mismatch: renderer expects {expected}, input provides {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("time aliasing metric {metric:.3e} exceeds {limit:.1e}; use more taps")]
    TimeAliasing { metric: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Broad classes of failure, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Consistency,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidArgument(_) => ErrorCategory::Usage,
            Error::FingerprintMismatch { .. } => ErrorCategory::Consistency,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! invalid_arg {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(format!($($arg)*))
    };
}

macro_rules! invalid_data {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidData(format!($($arg)*))
    };
}

pub(crate) use invalid_arg;
pub(crate) use invalid_data;
