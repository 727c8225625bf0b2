pub mod evaluate;
pub mod fit;
pub mod replicate;
pub mod simulate;

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};
use crate::manifest::{read_input, FileDigest};

/// Reads a JSON config; unknown fields and type errors are config errors.
pub fn read_json_config<T: DeserializeOwned>(
    path: &Path,
    inputs: &mut Vec<FileDigest>,
) -> CliResult<T> {
    let bytes = read_input(path, inputs)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}
