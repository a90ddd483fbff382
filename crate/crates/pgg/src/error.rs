//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PggError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("no root of G found in (0,1)")]
    NoRoot,

    #[error("internal error: {0}")]
    InternalError(String),

    #[error("polynomial factorization left a nonzero remainder")]
    FactorizationError,

    #[error("integrator step size underflow at t = {0}")]
    StepFailure(f64),

    #[error("state left (0,1)^2 beyond tolerance at t = {0}")]
    BoundaryEscape(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("field left [0,1] beyond tolerance at t = {0}")]
    BoundsViolation(f64),

    #[error("tridiagonal solve failed")]
    SolveFailure,

    #[error("Lyapunov functional increased beyond slack at t = {0}")]
    LyapunovViolation(f64),

    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    #[error("invalid initial-data spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PggError>;
