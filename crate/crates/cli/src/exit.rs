//! Stable exit codes and the mapping from library errors.

use std::fmt;
use std::path::Path;

use gumdrop::Error;

pub const OTHER: i32 = 1;
pub const NOT_FOUND: i32 = 2;
pub const CONFIG: i32 = 3;
pub const MODEL: i32 = 4;
pub const NO_TREES: i32 = 5;
pub const MISALIGNED: i32 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    /// `what` names the input in the message, e.g. "dev corpus".
    pub fn io(what: &str, path: &Path, err: std::io::Error) -> Self {
        if err.kind() == std::io::ErrorKind::NotFound {
            CliError::new(NOT_FOUND, format!("{what} not found: {}", path.display()))
        } else {
            CliError::new(NOT_FOUND, format!("cannot read {what} {}: {err}", path.display()))
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn code_of(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::UnknownFeature(_) => CONFIG,
        Error::FingerprintMismatch { .. } | Error::VersionMismatch { .. } | Error::InvalidModel(_) => MODEL,
        Error::MissingTrees(_) => NO_TREES,
        Error::Misalignment(_) => MISALIGNED,
        Error::Fold { source, .. } => code_of(source),
        _ => OTHER,
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::new(code_of(&err), err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::new(OTHER, err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
