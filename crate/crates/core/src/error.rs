use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or out-of-domain argument.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The offsets cover every residue class modulo `witness`.
    #[error("tuple is not admissible: offsets cover every residue class mod {witness}")]
    Inadmissible { witness: u64 },

    /// A configured resource cap would be exceeded.
    #[error("resource cap `{cap}` exceeded: requested {requested}, limit {limit}")]
    Resource {
        cap: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("division by zero")]
    DivisionByZero,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
