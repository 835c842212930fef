//! Run manifests: every command writes its data products plus a
//! `manifest.json` recording the exact invocation, input hashes and output
//! hashes, so any result can be traced back to what produced it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileRef {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub inputs: Vec<FileRef>,
    pub outputs: Vec<FileRef>,
    /// Wall-clock duration of the run. The only non-reproducible field in
    /// any output file.
    pub timing_ms: u128,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects inputs and outputs of one command run rooted at `out_dir`,
/// then writes the manifest last.
pub struct RunContext {
    out_dir: PathBuf,
    command: String,
    seed: Option<u64>,
    inputs: Vec<FileRef>,
    outputs: Vec<FileRef>,
    started: Instant,
}

impl RunContext {
    pub fn new(command: &str, out_dir: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)
            .map_err(|e| CliError::runtime(format!("cannot create output directory '{}': {e}", out_dir.display())))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            command: command.to_string(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    /// Registers (and hashes) an input file.
    pub fn record_input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::usage(format!("cannot read {role} file '{}': {e}", path.display())))?;
        self.inputs.push(FileRef {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes one output file under the run directory and registers it.
    pub fn write_output(&mut self, name: &str, role: &str, content: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, content)
            .map_err(|e| CliError::runtime(format!("cannot write '{}': {e}", path.display())))?;
        self.outputs.push(FileRef {
            role: role.to_string(),
            path: name.to_string(),
            sha256: sha256_hex(content.as_bytes()),
        });
        Ok(path)
    }

    /// CSV outputs open with a comment line pointing at the manifest.
    pub fn write_csv_output(&mut self, name: &str, role: &str, csv_body: &str) -> Result<PathBuf, CliError> {
        let content = format!("# manifest: {MANIFEST_NAME}\n{csv_body}");
        self.write_output(name, role, &content)
    }

    /// Writes the manifest itself; call after every other output.
    pub fn finish(self) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            timing_ms: self.started.elapsed().as_millis(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::runtime(format!("manifest serialization failed: {e}")))?;
        let path = self.out_dir.join(MANIFEST_NAME);
        fs::write(&path, text)
            .map_err(|e| CliError::runtime(format!("cannot write '{}': {e}", path.display())))?;
        Ok(())
    }
}
