//! Run manifests: resolved parameters plus digests of every output file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::emit::write_json;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn start(command: &str, argv: &[String]) -> Self {
        let now = timestamp();
        Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            parameters: serde_json::Value::Null,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            started: now.clone(),
            finished: now,
            outputs: Vec::new(),
        }
    }

    pub fn parameters<T: Serialize>(&mut self, value: &T) {
        self.parameters = serde_json::to_value(value).expect("parameters serialize");
    }

    pub fn record(&mut self, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.outputs.push(OutputEntry {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Stamps the finish time and writes the manifest, returning its path.
    pub fn finish(mut self, path: &Path) -> CliResult<PathBuf> {
        self.finished = timestamp();
        write_json(path, &self)?;
        Ok(path.to_path_buf())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// `dir/name.csv` → `dir/name.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_next_to_output() {
        assert_eq!(
            manifest_path_for(Path::new("out/pts.csv")),
            PathBuf::from("out/pts.manifest.json")
        );
    }
}
