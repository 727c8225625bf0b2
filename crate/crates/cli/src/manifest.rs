use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written as `manifest.json` next to every command's
/// outputs. Timestamps appear only here.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started: String,
    pub finished: String,
    /// Non-reproducible run facts such as wall-clock timings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &Path, inputs: &mut Vec<FileDigest>) -> CliResult<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    inputs.push(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    Ok(bytes)
}

/// Output directory that records every file written into it.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::io(&self.root.join(name), e))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(mut self, manifest: ManifestParts) -> CliResult<()> {
        let m = RunManifest {
            tool: "jointges",
            version: env!("CARGO_PKG_VERSION"),
            command: manifest.command,
            config: manifest.config,
            seed: manifest.seed,
            inputs: manifest.inputs,
            outputs: std::mem::take(&mut self.written),
            started: manifest.started,
            finished: now(),
            extra: manifest.extra,
        };
        let text = serde_json::to_string_pretty(&m)
            .map_err(|e| CliError::io(&self.root.join("manifest.json"), e))?;
        let path = self.root.join("manifest.json");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}

/// Everything in the manifest except the output list and end time.
pub struct ManifestParts {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub started: String,
    pub extra: Option<serde_json::Value>,
}
