//! Reproducible experiment runner: resolves a flat JSON config, runs one
//! registered experiment and archives its tables, plots and assertions
//! under a manifest that can be replayed.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod report;
pub mod svg;
pub mod table;

use config::Overrides;
pub use error::{CliError, Result};
use manifest::{ExperimentManifest, CONFIG_FILE};
use std::path::{Path, PathBuf};
use std::time::Instant;
use table::{assertions_table, Assertion, ASSERTIONS_FILE};

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "SOLSYM_THREADS";

#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub name: String,
    pub config: Option<PathBuf>,
    /// Artifact directory; `runs/<name>-<unix time>` when absent.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub dir: PathBuf,
    pub manifest: ExperimentManifest,
    pub assertions: Vec<Assertion>,
}

impl RunResult {
    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            EXIT_PASS
        } else {
            EXIT_ASSERTION
        }
    }
}

pub fn run_experiment(req: &RunRequest) -> Result<RunResult> {
    let entry = experiments::lookup(&req.name).ok_or_else(|| CliError::UnknownExperiment(req.name.clone()))?;
    let overrides = match &req.config {
        Some(p) => config::read_overrides(p)?,
        None => Overrides::default(),
    };
    if let Some(other) = &overrides.experiment {
        if other != entry.name {
            return Err(CliError::Config(format!("manifest is for `{other}`, not `{}`", entry.name)));
        }
    }
    let start = Instant::now();
    let (parameters, outcome) = (entry.execute)(&overrides.values, req.seed)?;
    let elapsed_s = start.elapsed().as_secs_f64();

    let dir = match &req.out {
        Some(d) => d.clone(),
        None => default_dir(entry.name),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut artifacts = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        artifacts.push(name.to_string());
        Ok(())
    };
    let cfg_text = serde_json::to_string_pretty(&parameters).expect("parameters serialize") + "\n";
    put(CONFIG_FILE, cfg_text.as_bytes())?;
    for t in &outcome.tables {
        put(&t.name, &t.to_csv())?;
    }
    put(ASSERTIONS_FILE, &assertions_table(&outcome.assertions).to_csv())?;
    for p in &outcome.plots {
        put(&p.name, p.svg.as_bytes())?;
    }
    let manifest = ExperimentManifest {
        experiment: entry.name.to_string(),
        parameters,
        artifacts,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_budget_s: entry.budget_s,
        elapsed_s,
        threads: rayon::current_num_threads(),
    };
    manifest.write(&dir)?;
    Ok(RunResult { dir, manifest, assertions: outcome.assertions })
}

fn default_dir(name: &str) -> PathBuf {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let base = Path::new("runs").join(format!("{name}-{secs}"));
    let mut dir = base.clone();
    let mut k = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}-{k}", base.display()));
        k += 1;
    }
    dir
}

/// Size the global rayon pool from [`THREADS_VAR`], if set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
