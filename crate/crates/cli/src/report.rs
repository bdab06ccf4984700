//! Consolidated pass/fail summary of an artifact directory.
//!
//! Numbers in the summary are copied verbatim from `assertions.csv`, so
//! each one traces back to a CSV cell.

use crate::error::{CliError, Result};
use crate::manifest::ExperimentManifest;
use crate::table::ASSERTIONS_FILE;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use std::path::Path;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub measured: String,
    pub relation: String,
    pub threshold: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub tool_version: String,
    pub source: String,
    pub passed: usize,
    pub failed: usize,
    pub assertions: Vec<SummaryRow>,
    /// Artifacts listed in the manifest but absent from the directory.
    pub missing_artifacts: Vec<String>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    pub fn to_text(&self) -> String {
        let w = self.assertions.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {} (tool {})", self.experiment, self.tool_version);
        let _ = writeln!(s, "{:<w$}  {:>24}  {:<2}  {:>24}  result", "name", "measured", "", "threshold");
        for r in &self.assertions {
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{:<w$}  {:>24}  {:<2}  {:>24}  {verdict}", r.name, r.measured, r.relation, r.threshold);
        }
        for m in &self.missing_artifacts {
            let _ = writeln!(s, "missing artifact: {m}");
        }
        let _ = writeln!(s, "{} passed, {} failed", self.passed, self.failed);
        s
    }
}

pub fn summarize(dir: &Path) -> Result<Summary> {
    let manifest = ExperimentManifest::read(dir)?;
    let path = dir.join(ASSERTIONS_FILE);
    let bad = |reason: String| CliError::Artifact { path: path.clone(), reason };
    let mut rd = csv::Reader::from_path(&path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = rd.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    if header != ["name", "measured", "relation", "threshold", "pass"] {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut assertions = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let pass = match &rec[4] {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("pass cell `{other}`"))),
        };
        assertions.push(SummaryRow {
            name: rec[0].to_string(),
            measured: rec[1].to_string(),
            relation: rec[2].to_string(),
            threshold: rec[3].to_string(),
            pass,
        });
    }
    let failed = assertions.iter().filter(|r| !r.pass).count();
    let missing_artifacts = manifest.artifacts.iter().filter(|a| !dir.join(a).is_file()).cloned().collect();
    Ok(Summary {
        experiment: manifest.experiment,
        tool_version: manifest.tool_version,
        source: ASSERTIONS_FILE.into(),
        passed: assertions.len() - failed,
        failed,
        assertions,
        missing_artifacts,
    })
}

/// Summarize `dir` and write `summary.json` next to the manifest.
pub fn report(dir: &Path) -> Result<Summary> {
    let s = summarize(dir)?;
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&s).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(s)
}
