//! Per-run manifest: what was run, on which files, with which settings.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, ResultExt};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config_path: Option<String>,
    /// Effective configuration after command-line overrides.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub workers: usize,
    pub versions: BTreeMap<&'static str, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub notes: BTreeMap<String, serde_json::Value>,
    pub wall_time_s: f64,
}

pub fn sha256_file(path: &Path) -> std::io::Result<(u64, String)> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok((bytes, hex::encode(hasher.finalize())))
}

fn digest(path: &Path) -> CliResult<FileDigest> {
    let (bytes, sha256) = sha256_file(path).usage_ctx(|| format!("checksumming {}", path.display()))?;
    Ok(FileDigest { path: path.display().to_string(), bytes, sha256 })
}

/// Collects a run's files and notes; `finish` writes the manifest.
pub struct Run {
    command: String,
    argv: Vec<String>,
    config_path: Option<PathBuf>,
    config: serde_json::Value,
    seed: Option<u64>,
    workers: usize,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    notes: BTreeMap<String, serde_json::Value>,
}

impl Run {
    pub fn new(
        command: &str,
        config_path: Option<PathBuf>,
        config: serde_json::Value,
        seed: Option<u64>,
        workers: usize,
    ) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            config_path,
            config,
            seed,
            workers,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.notes.insert(key.to_string(), v);
    }

    pub fn finish(self, manifest_path: &Path) -> CliResult<RunManifest> {
        let mut versions = BTreeMap::new();
        versions.insert("netcensus", netcensus::VERSION.to_string());
        versions.insert("netcensus-cli", env!("CARGO_PKG_VERSION").to_string());
        versions.insert("model_format", netcensus::chronobio::MODEL_FORMAT_VERSION.to_string());
        let manifest = RunManifest {
            command: self.command,
            argv: self.argv,
            config_path: self.config_path.map(|p| p.display().to_string()),
            config: self.config,
            seed: self.seed,
            workers: self.workers,
            versions,
            inputs: self.inputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            outputs: self.outputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            notes: self.notes,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(CliError::usage)?;
        std::fs::write(manifest_path, text + "\n").usage_ctx(|| format!("writing {}", manifest_path.display()))?;
        Ok(manifest)
    }
}
