use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub experiment: String,
    /// Every parameter the run used, defaults included.
    pub parameters: Map<String, Value>,
    /// File names relative to the manifest's directory.
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub wall_clock_budget_s: f64,
    pub elapsed_s: f64,
    pub threads: usize,
}

impl ExperimentManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(CliError::MissingManifest(dir.to_path_buf()));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Artifact { path, reason: e.to_string() })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}
