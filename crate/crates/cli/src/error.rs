use std::io;
use std::path::Path;

use cascade_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad configuration or out-of-range parameters.
    #[error("{0}")]
    Usage(String),
    /// Inputs that cannot be read or do not make sense.
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
    /// A pipeline stage failed.
    #[error("stage {stage} failed: {source}")]
    Stage { stage: String, source: Box<CliError> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
            CliError::Stage { source, .. } => source.exit_code(),
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    pub fn in_stage(self, stage: &str) -> Self {
        CliError::Stage {
            stage: stage.to_owned(),
            source: Box::new(self),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidParameter(_) => CliError::Usage(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Internal(format!("json: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a path to core errors raised while handling that file.
pub trait Context<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| match e {
            CoreError::InvalidParameter(_) => CliError::Usage(format!("{}: {e}", path.display())),
            _ => CliError::Data(format!("{}: {e}", path.display())),
        })
    }
}

impl<T> Context<T> for Result<T, io::Error> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::io(path, e))
    }
}
