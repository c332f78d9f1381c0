use thiserror::Error;

/// Errors raised by the exponent algebra, the slit map, the simulators and the
/// estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bracketed root search did not converge.
    #[error("root search failed: {0}")]
    RootSearch(String),

    /// A size guard refused a workload; rerun with an explicit override.
    #[error("refused: {what} = {requested} exceeds the guard {limit} (override required)")]
    Guard {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
