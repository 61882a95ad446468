use thiserror::Error;

use crate::prox_x::ProxXSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("symmetric eigensolver failed to converge")]
    EigenFailure,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Newton iteration cap reached; `best` is the iterate with the smallest
    /// dual gradient seen.
    #[error("semismooth Newton did not converge ({iterations} iterations, |grad| = {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        best: Box<ProxXSolution>,
    },

    #[error("line search stalled after {backtracks} backtracks (|grad| = {grad_norm:e})")]
    Stall { backtracks: usize, grad_norm: f64 },

    #[error("dual iterate diverged (|y| = {dual_norm:e}); constraint set appears empty")]
    Infeasible { dual_norm: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported instance file version `{0}`")]
    UnsupportedVersion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
