use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the caller's input was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two operands have incompatible shapes.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// A matrix that must be positive definite is not.
    #[error("{context}: matrix is not positive definite (minimum eigenvalue {min_eigenvalue:e})")]
    Singular {
        context: String,
        min_eigenvalue: f64,
    },

    /// Too few usable observations or replications.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A post-processing function failed on one posterior draw.
    #[error("posterior draw {index}: {source}")]
    Draw {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular { .. } => true,
            Error::Draw { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
