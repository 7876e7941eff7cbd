use thiserror::Error;

/// Errors raised by the bridge toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no batch was accepted out of {batches}; enlarge epsilon or reduce n")]
    NoAcceptedBatches { batches: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
