use thiserror::Error;

/// Failures surfaced by the library. Outcomes that are part of normal
/// operation (a quotient that is not integral, an unfinished factorization)
/// are reported through result types instead.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{what} = {value} exceeds the sieve limit {limit}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("value needs {bits} bits, above the configured cap of {cap} bits{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    BitCap {
        bits: u64,
        cap: u64,
        context: Option<String>,
    },

    #[error("resource exhausted: {0}")]
    Resource(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for errors caused by bad caller input (maps to CLI exit code 2).
    pub fn is_argument(&self) -> bool {
        matches!(self, Error::Argument(_) | Error::OutOfRange { .. })
    }
}
