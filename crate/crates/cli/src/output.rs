//! Output directory: every file goes through one writer that records its hash.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileRecord>,
    inputs: Vec<FileRecord>,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Validation(format!("output directory {} is not writable: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new(), inputs: Vec::new(), started: Instant::now() })
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileRecord { path: path.display().to_string(), sha256: sha256_hex(bytes) });
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(FileRecord { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json`; `extra` carries run-specific data such as timings.
    pub fn finish(mut self, command: &[String], extra: Value) -> Result<Vec<FileRecord>, CliError> {
        let manifest = json!({
            "tool": "quake-limit",
            "version": env!("CARGO_PKG_VERSION"),
            "core_version": quake_limit::VERSION,
            "command": command,
            "inputs": self.inputs,
            "outputs": self.written,
            "wall_clock_ms": self.started.elapsed().as_secs_f64() * 1e3,
            "run": extra,
        });
        let outputs = self.written.clone();
        self.write_json("manifest.json", &manifest)?;
        Ok(outputs)
    }
}
