use std::path::PathBuf;

use crate::entity::EntityKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid pattern `{pattern}`: {source}")]
    InvalidPattern {
        pattern: String,
        #[source]
        source: Box<regex::Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{context}: line {line}: {source}")]
    Json {
        context: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {context}: {message}")]
    Csv { context: String, message: String },

    #[error("request to {url} failed after {attempts} attempt(s){}: {message}", status.map(|s| format!(" (last status {s})")).unwrap_or_default())]
    Transport {
        url: String,
        status: Option<u16>,
        attempts: u32,
        message: String,
    },

    #[error("malformed service response: {0}")]
    Protocol(String),

    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index was built with embedder `{found}`, but `{expected}` is configured")]
    EmbedderMismatch { expected: String, found: String },

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("duplicate key: {0}")]
    DuplicateKey(String),

    #[error("duplicate prediction for ({doc_id}, {kind})")]
    DuplicatePrediction { doc_id: String, kind: EntityKind },

    #[error("no JSON object found in model response")]
    ParseFailure,

    #[error("no segments retrieved")]
    NoSegments,

    #[error("no mock fixture for prompt sha256 {0}")]
    FixtureMissing(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn pattern(pattern: &str, source: regex::Error) -> Self {
        Error::InvalidPattern {
            pattern: pattern.to_string(),
            source: Box::new(source),
        }
    }
}
