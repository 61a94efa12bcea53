use thiserror::Error;

/// Errors produced by the solver toolkit.
#[derive(Debug, Error)]
pub enum VmmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("singular matrix: pivot {pivot:.3e} at elimination step {step} (column {column})")]
    SingularMatrix {
        step: usize,
        column: usize,
        pivot: f64,
    },

    #[error("nonlinear solve did not converge: {reason} (residual history {history:?})")]
    NonConvergence { reason: String, history: Vec<f64> },

    #[error("continuation failed at eps = {eps:e}: {source}")]
    Continuation {
        eps: f64,
        #[source]
        source: Box<VmmError>,
    },

    #[error("surgery iteration {iteration} failed: {source}")]
    Surgery {
        iteration: usize,
        #[source]
        source: Box<VmmError>,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, VmmError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(VmmError::InvalidArgument(msg.into()))
}
