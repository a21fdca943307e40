use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("numeric inconsistency: {0}")]
    NumericInconsistency(String),
    #[error("input outside the evaluation domain: {0}")]
    OutOfDomain(String),
    #[error("lemma violation: {0}")]
    LemmaViolation(String),
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
