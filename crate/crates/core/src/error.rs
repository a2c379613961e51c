use thiserror::Error;

/// Errors raised by constructors, estimators and bound formulas.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("evaluation budget exceeded: {requested} evaluations requested, cap is {cap}")]
    Budget { requested: u128, cap: u64 },
    #[error("outside the range where the inequality is stated: {0}")]
    Range(String),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
