//! Run manifest: configuration snapshot, input and output hashes, status.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    /// Relative to the output directory for outputs, as given for inputs.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    /// `running`, `ok`, `check-failed`, `usage-error`, `numerical-failure`
    /// or `interrupted`.
    pub status: String,
    pub exit_code: i32,
    pub message: Option<String>,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// File name of the manifest a command leaves in its output directory.
pub fn manifest_name(command: &str) -> String {
    format!("manifest-{command}.json")
}

impl RunManifest {
    pub fn start(command: &str, config: BTreeMap<String, serde_json::Value>) -> Self {
        RunManifest {
            version: MANIFEST_VERSION.to_string(),
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            status: "running".into(),
            exit_code: -1,
            message: None,
            started: now(),
            finished: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read input {}: {e}", path.display())))?;
        self.inputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn finish(&mut self, status: &str, exit_code: i32, message: Option<String>) {
        self.status = status.to_string();
        self.exit_code = exit_code;
        self.message = message;
        self.finished = Some(now());
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(out)?;
        let path = out.join(manifest_name(&self.command));
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: not a manifest: {e}", path.display())))
    }

    /// Outputs whose current content no longer matches the recorded hash.
    pub fn stale_outputs(&self, out: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|f| std::fs::read(out.join(&f.path)).map_or(true, |b| sha256_hex(&b) != f.sha256))
            .map(|f| f.path.clone())
            .collect()
    }
}
