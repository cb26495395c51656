use std::io;

/// Crate-wide error type.
///
/// `Parse` and `Validation` map to exit code 1 (bad input), everything
/// else to exit code 2 (runtime failure).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: column '{column}': {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },
    #[error("{0}")]
    Validation(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("model serialization: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Error::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation(_) => 1,
            Error::Io(_) | Error::Serialize(_) | Error::Runtime(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
