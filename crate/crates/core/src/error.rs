use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("utterance too short: {samples} samples, need at least {needed} for one frame")]
    UtteranceTooShort { samples: usize, needed: usize },

    #[error("empty utterance")]
    EmptyUtterance,

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncated {0}")]
    Truncated(&'static str),

    #[error("trailing bytes after {0}")]
    TrailingData(&'static str),

    #[error("wrong model kind: expected {expected}, found {found}")]
    WrongModelKind { expected: &'static str, found: String },

    #[error("pool smaller than k: pool has {pool} frames, k = {k}")]
    PoolSmallerThanK { pool: usize, k: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerical failure in GMM component {component}: {reason}")]
    ComponentFailure { component: usize, reason: String },

    #[error("zero vector cannot be cosine-scored")]
    ZeroVector,

    #[error("no imposters: trials need at least 2 speakers, got {0}")]
    NoImposters(usize),

    #[error("empty class: {0}")]
    EmptyClass(&'static str),

    #[error("unsupported audio: {0}")]
    UnsupportedAudio(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::PoolSmallerThanK { .. } => ErrorClass::Config,
            Error::NonFinite(_) | Error::ComponentFailure { .. } | Error::ZeroVector => ErrorClass::Numeric,
            Error::Stage { source, .. } | Error::File { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    /// Attaches the file being processed when the error surfaced.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::File { path: path.into(), source: Box::new(self) }
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Error {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    /// Strips stage/file wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::File { source, .. } => source.root(),
            e => e,
        }
    }
}
