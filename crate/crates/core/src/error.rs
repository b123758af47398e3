use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no decodable images in {0}")]
    EmptyDirectory(PathBuf),
    #[error("record {id}: missing file {path}")]
    MissingFile { id: String, path: PathBuf },
    #[error("record {id}: none of the words {words:?} has an embedding")]
    NoResolvableWords { id: String, words: Vec<String> },
    #[error("only {distinct} distinct points for K = {k}; use a smaller K")]
    TooFewDistinct { k: usize, distinct: usize },
    #[error("no label for kept records: {}", .missing.join(", "))]
    CoverageGap { missing: Vec<String> },
    #[error("feature extraction failed for {id}: {message}")]
    Extractor { id: String, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("non-finite value during training at step {step}: {what}")]
    NonFinite { step: u64, what: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { context: context.into(), source }
    }

    /// True for errors caused by bad arguments, configs or fixtures rather than
    /// by something failing at run time.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Config(_)
                | Error::EmptyDirectory(_)
                | Error::NoResolvableWords { .. }
                | Error::TooFewDistinct { .. }
                | Error::CoverageGap { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
