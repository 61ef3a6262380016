//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, sampling, detection and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions of two related objects disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A conditional precision matrix failed to factorize even after
    /// jitter escalation. `min_eigenvalue` is the offending Cholesky
    /// pivot, an estimate of the smallest eigenvalue.
    #[error("ill-conditioned {context}: minimum eigenvalue estimate {min_eigenvalue:e}{}",
            iteration.map(|i| format!(" (iteration {i})")).unwrap_or_default())]
    IllConditioned {
        context: &'static str,
        min_eigenvalue: f64,
        iteration: Option<usize>,
    },

    /// A CSV cell could not be parsed. Line and column are 1-based.
    #[error("csv parse error at line {line}, column {column}: {message}")]
    CsvParse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A CSV row has a different number of cells than the first row.
    #[error("ragged csv at line {line}: expected {expected} cells, found {found}")]
    RaggedCsv {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a chain iteration index to an ill-conditioning error.
    pub(crate) fn with_iteration(self, iter: usize) -> Self {
        match self {
            Error::IllConditioned {
                context,
                min_eigenvalue,
                ..
            } => Error::IllConditioned {
                context,
                min_eigenvalue,
                iteration: Some(iter),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
