//! Error type shared across the pipeline modules.

use thiserror::Error;

/// Coarse error class, used by callers (the CLI in particular) to map
/// failures onto distinct exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments, bad configuration, missing inputs.
    Config,
    /// Endpoint unreachable or returned an unusable response.
    Network,
    /// An extraction or embedding backend failed.
    Backend,
    /// Artifacts disagree with each other or with their schema.
    DataIntegrity,
}

/// Errors produced by the core pipeline modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("network failure: {0}")]
    Network(String),

    #[error("feed entry {index}: {message}")]
    FeedParse { index: usize, message: String },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("paper '{0}' has neither sections nor an abstract")]
    EmptyPaper(String),

    #[error("extraction failed for paper '{paper_id}': {message}")]
    Extraction { paper_id: String, message: String },

    #[error("embedding failed for surfaces {surfaces:?}: {message}")]
    Embedding {
        surfaces: Vec<String>,
        message: String,
    },

    #[error("degenerate embedding for '{0}': zero-norm vector")]
    DegenerateEmbedding(String),

    #[error("backend failure: {0}")]
    Backend(String),

    #[error("data integrity: {0}")]
    DataIntegrity(String),

    #[error("line {line}: {message}")]
    RecordParse { line: usize, message: String },

    #[error("i/o failure on '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The class this error falls into, for exit-code mapping.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) | Error::EmptyCorpus(_) | Error::Io { .. } => {
                ErrorClass::Config
            }
            Error::Network(_) | Error::FeedParse { .. } => ErrorClass::Network,
            Error::Extraction { .. }
            | Error::Embedding { .. }
            | Error::DegenerateEmbedding(_)
            | Error::Backend(_) => ErrorClass::Backend,
            Error::EmptyPaper(_) | Error::DataIntegrity(_) | Error::RecordParse { .. } => {
                ErrorClass::DataIntegrity
            }
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
