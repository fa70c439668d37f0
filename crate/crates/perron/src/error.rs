//! Crate-wide error type.

use crate::scalar::Backend;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("backend mismatch: expected {expected}, found {found}")]
    BackendMismatch { expected: Backend, found: Backend },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("root finder did not converge: {0}")]
    RootFinding(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
