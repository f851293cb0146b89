//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the solvers and evaluators.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64, last: Vec<f64> },

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("multivalued region: {} branches {branches:?}", branches.len())]
    Ambiguous { branches: Vec<f64> },

    #[error("genericity condition fails: {0}")]
    Genericity(String),

    #[error("extended precision exhausted at n = {n}")]
    Precision { n: usize },

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("instability: {0}")]
    Stability(String),

    #[error("wrong solution branch: {0}")]
    Branch(String),

    #[error("accuracy target missed: {0}")]
    Accuracy(String),

    #[error("outside the regime of validity: {0}")]
    OutOfRegime(String),

    #[error("field is not one-cut: {0}")]
    NotOneCut(String),

    #[error("catastrophe reached: {0}")]
    CatastropheReached(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
