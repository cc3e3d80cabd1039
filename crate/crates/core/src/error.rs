use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A theorem's hypothesis does not hold for the supplied inputs; the bound
    /// is not evaluated rather than extrapolated.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("non-finite integrand value {value} at node {node} (t = {t})")]
    Quadrature { node: usize, t: f64, value: f64 },

    #[error("estimated density is zero at t = {t} and no density floor is set")]
    DivisionGuard { t: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("target infeasible for log10(n) <= {max_log10_n}: best precision {best_eps} at confidence {best_p_err}")]
    Infeasible { max_log10_n: f64, best_eps: f64, best_p_err: f64 },

    #[error("sampler failed: {0}")]
    Sampler(String),

    #[error("parse error in {path:?} line {line}: {message}")]
    Parse { path: Option<PathBuf>, line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        Error::HypothesisViolated(msg.into())
    }
}
