use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("size guard exceeded: {what} needs {needed}, limit is {limit}")]
    Guard {
        what: String,
        needed: u128,
        limit: u128,
    },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("criterion does not apply: {0}")]
    NotApplicable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn guard(what: &str, needed: u128, limit: u128) -> Result<()> {
    if needed > limit {
        Err(Error::Guard {
            what: what.to_string(),
            needed,
            limit,
        })
    } else {
        Ok(())
    }
}
