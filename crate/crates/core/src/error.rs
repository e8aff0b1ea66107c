use thiserror::Error;

/// Errors surfaced by the library and the bench harness.
#[derive(Debug, Error)]
pub enum MtlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A subspace argument has numerical rank below its column count.
    #[error("degenerate subspace: {0}")]
    DegenerateSubspace(String),

    /// An iterative solver produced a non-finite objective.
    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, MtlError>;

impl MtlError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        MtlError::InvalidArgument(msg.into())
    }
}
