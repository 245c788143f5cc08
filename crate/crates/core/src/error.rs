use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A line-delimited record that could not be decoded or validated.
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate id `{id}`")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    /// Malformed binary embedding payload.
    #[error("embedding file at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("invalid language code `{0}`")]
    InvalidLanguage(String),

    #[error("language `{0}` is not in the configured language set")]
    UnsupportedLanguage(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("invalid embedding matrix: {0}")]
    InvalidMatrix(String),

    #[error("cannot build an index from an empty matrix")]
    EmptyIndex,

    #[error("k must be at least 1")]
    InvalidK,

    #[error("invalid retrieval result for `{qid}`: {reason}")]
    InvalidRetrieval { qid: String, reason: String },

    #[error("similarity undefined for a zero vector")]
    ZeroVector,

    #[error("correlation undefined: {0}")]
    Correlation(String),

    #[error("invalid question group `{group_id}`: {reason}")]
    InvalidGroup { group_id: String, reason: String },

    #[error("id `{0}` has no embedding")]
    MissingEmbedding(String),

    #[error("passage `{0}` not found in corpus")]
    UnresolvedPassage(String),

    #[error("question `{0}` not found")]
    UnresolvedQuestion(String),

    #[error("no retrieval result for question `{0}`")]
    MissingRetrieval(String),

    #[error("duplicate answer for question `{0}`")]
    DuplicateAnswer(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    /// Stable machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Record { .. } => "record",
            Error::DuplicateId { .. } => "duplicate_id",
            Error::Format { .. } => "format",
            Error::InvalidLanguage(_) => "invalid_language",
            Error::UnsupportedLanguage(_) => "unsupported_language",
            Error::DimMismatch { .. } => "dim_mismatch",
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::EmptyIndex => "empty_index",
            Error::InvalidK => "invalid_k",
            Error::InvalidRetrieval { .. } => "invalid_retrieval",
            Error::ZeroVector => "zero_vector",
            Error::Correlation(_) => "correlation",
            Error::InvalidGroup { .. } => "invalid_group",
            Error::MissingEmbedding(_) => "missing_embedding",
            Error::UnresolvedPassage(_) => "unresolved_passage",
            Error::UnresolvedQuestion(_) => "unresolved_question",
            Error::MissingRetrieval(_) => "missing_retrieval",
            Error::DuplicateAnswer(_) => "duplicate_answer",
            Error::EmptyInput(_) => "empty_input",
            Error::Config(_) => "config",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
