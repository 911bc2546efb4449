use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("chain order {0} outside the supported range 1..=12")]
    OrderOutOfRange(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("order mismatch: expected {expected}, got {actual}")]
    OrderMismatch { expected: usize, actual: usize },

    #[error("spike train does not decode to a bang-bang signal: {0}")]
    Decode(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("singular Gram matrix: {0}")]
    SingularGram(String),

    #[error("bang-bang structure violated: {0}")]
    StructureViolation(String),

    #[error("no movement: velocity is identically zero")]
    NoMovement,

    #[error("degenerate segment: {0}")]
    DegenerateSegment(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by solver failure rather than bad input or data.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_)
                | Error::NonConvergence { .. }
                | Error::SingularGram(_)
                | Error::StructureViolation(_)
        )
    }

    /// True for errors caused by data files (I/O, parse, validation of loaded data).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::NoMovement
                | Error::DegenerateSegment(_)
                | Error::Decode(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
