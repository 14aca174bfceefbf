use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension error: operation requires dim = {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty spectrum: interval length must be at least 1")]
    EmptySpectrum,

    #[error("size error: {size} sites exceeds the dense cap of {cap}; use the Monte Carlo estimators instead")]
    Size { size: usize, cap: usize },

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("time too small: bracket(t) = 0 at t = {0}")]
    TimeTooSmall(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
