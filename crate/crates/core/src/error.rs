use thiserror::Error;

/// Errors raised by the engine and its loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: malformed record: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}:{line}: unknown entity `{id}`")]
    UnknownEntityAt {
        source_name: String,
        line: usize,
        id: String,
    },

    #[error("{source_name}:{line}: duplicate entity id `{id}`")]
    DuplicateEntity {
        source_name: String,
        line: usize,
        id: String,
    },

    #[error("{source_name}:{line}: self-loop triple on `{id}`")]
    SelfLoop {
        source_name: String,
        line: usize,
        id: String,
    },

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("`{0}` is not an item")]
    NotAnItem(String),

    #[error("path type `{0}` is not in the frequency index (index built with a smaller max_len?)")]
    UnknownPathType(String),

    #[error("weights must lie in [0,1] and sum to 1, got ({0}, {1}, {2})")]
    InvalidWeights(f64, f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("cache format: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn malformed(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
