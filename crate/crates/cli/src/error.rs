use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown experiment `{0}`; registered: {list}", list = crate::experiments::NAMES.join(", "))]
    UnknownExperiment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no manifest.json in {0}")]
    MissingManifest(PathBuf),

    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error(transparent)]
    Compute(#[from] solsym::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
