use thiserror::Error;

/// Errors surfaced by the persistence engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent user input.
    #[error("input error: {0}")]
    Input(String),

    /// A parse failure with a 1-based line number.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An operation would place a simplex before one of its faces.
    #[error("face order violated: {0}")]
    FaceOrder(String),

    /// A decomposition invariant failed to hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
