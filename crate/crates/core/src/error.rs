use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{function}: argument out of domain ({detail})")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid vine: {0}")]
    InvalidVine(String),

    #[error("missing partial correlation for edge {0}")]
    MissingEdge(String),

    #[error("partial correlation {value} for edge {edge} is outside (-1, 1)")]
    PartialOutOfRange { edge: String, value: f64 },

    #[error("{function} failed to converge after {iterations} iterations")]
    NoConvergence {
        function: &'static str,
        iterations: usize,
    },

    #[error("sample too small: need at least {min}, got {got}")]
    SampleSize { min: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource exhausted: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }
}
