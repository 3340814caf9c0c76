use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("line {line}: unparsable timestamp {value:?}")]
    BadTimestamp { line: u64, value: String },

    #[error("malformed header: expected {expected}, found {found:?}")]
    MalformedHeader { expected: String, found: String },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("unsupported snapshot version {found} (this build reads version {supported})")]
    SnapshotVersion { found: u32, supported: u32 },

    #[error("unknown user {0:?}")]
    UnknownUser(String),

    #[error("unknown tag {0:?}")]
    UnknownTag(String),

    #[error("density is undefined for {users} user(s); at least 2 are required")]
    UndefinedDensity { users: usize },

    #[error("user {user:?} never adopted tag {tag:?}")]
    NoAdoption { user: String, tag: String },

    #[error("user {user:?} has no adoption with a non-empty neighbourhood")]
    UndefinedThreshold { user: String },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("insufficient tail: {n_tail} sample(s) at or above the cutoff, at least 2 required")]
    InsufficientTail { n_tail: usize },

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
