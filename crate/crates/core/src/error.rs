use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An index, mask or parameter outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A block list that is not a partition of the player set.
    #[error("invalid partition: {0}")]
    Partition(String),

    /// Malformed game, trace or config text.
    #[error("format error: {0}")]
    Format(String),

    /// Problem size above a documented enumeration or computation cap.
    #[error("{what} requires n <= {cap}, got {got}")]
    Cap { what: &'static str, cap: usize, got: usize },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
