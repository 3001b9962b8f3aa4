//! Per-run manifest recording what went in and what came out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::exit::{CliError, CliResult, OTHER};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub resolved_config: Option<String>,
    /// sha256 of every input file, keyed by path as given.
    pub input_hashes: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub artifacts: Vec<String>,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            resolved_config: None,
            input_hashes: BTreeMap::new(),
            seed: None,
            artifacts: Vec::new(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_clock_secs: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.input_hashes.insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn artifact(&mut self, path: &Path) {
        self.artifacts.push(path.display().to_string());
    }

    pub fn write(mut self, path: &Path) -> CliResult<()> {
        self.wall_clock_secs = self.started.map_or(0.0, |s| s.elapsed().as_secs_f64());
        let json = serde_json::to_string_pretty(&self)?;
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::new(OTHER, format!("cannot write manifest {}: {e}", path.display())))?;
        log::info!("manifest written to {}", path.display());
        Ok(())
    }
}

/// `--manifest` when given, otherwise `<artifact>.manifest.json`.
pub fn manifest_path(explicit: Option<&Path>, artifact: &Path) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = artifact.as_os_str().to_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}
