use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("schema fingerprint mismatch: model expects {expected:016x}, record has {found:016x}")]
    FingerprintMismatch { expected: u64, found: u64 },

    #[error("model format version {found} is not supported (this build reads version {expected})")]
    VersionMismatch { expected: u16, found: u16 },

    #[error("invalid model file: {0}")]
    InvalidModel(String),

    #[error("token misalignment: {0}")]
    Misalignment(String),

    #[error("{0}")]
    MissingTrees(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("external predictions: {0}")]
    External(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
