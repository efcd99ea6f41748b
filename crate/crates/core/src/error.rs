use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed tabular input, with the 1-based line it was found on.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("language `{0}` has no trained model")]
    Untrainable(String),

    #[error("unknown language `{0}`")]
    UnknownLanguage(String),

    #[error("tier set mismatch: {0}")]
    TierMismatch(String),

    #[error("feature width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("corrupt model bundle: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
