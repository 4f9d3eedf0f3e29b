use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run, written as `manifest.json` beside its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Resolved configuration, defaults included.
    pub config: Value,
    pub version: String,
    pub platform: String,
    pub master_seed: Option<u64>,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
    pub exit_code: u8,
}

pub fn platform() -> String {
    format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS)
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::io(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
