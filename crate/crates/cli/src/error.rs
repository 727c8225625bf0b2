use std::fmt;
use std::path::Path;

use jointges::refit::RefitError;
use jointges::search::SearchError;

/// A failed command: message plus the documented process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
    pub const SHAPE: u8 = 4;
    pub const SEARCH: u8 = 5;
    pub const REPLICATES: u8 = 6;

    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Self::CONFIG, message)
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::new(Self::IO, format!("{}: {err}", path.display()))
    }

    pub fn shape(message: impl Into<String>) -> Self {
        Self::new(Self::SHAPE, message)
    }

    pub fn search(message: impl Into<String>) -> Self {
        Self::new(Self::SEARCH, message)
    }

    pub fn replicates(message: impl Into<String>) -> Self {
        Self::new(Self::REPLICATES, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::InvalidConfig(_) => CliError::config(e.to_string()),
            _ => CliError::search(e.to_string()),
        }
    }
}

impl From<RefitError> for CliError {
    fn from(e: RefitError) -> Self {
        match e {
            RefitError::Search(s) => s.into(),
            RefitError::InvalidConfig(_) | RefitError::GridEmpty => CliError::config(e.to_string()),
            RefitError::TooFewRows { .. } | RefitError::Shape(_) => CliError::shape(e.to_string()),
            _ => CliError::search(e.to_string()),
        }
    }
}
