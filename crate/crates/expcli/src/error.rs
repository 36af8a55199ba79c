use std::path::PathBuf;

use thiserror::Error;

/// Schema or value problem in a configuration document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config error in `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{stage}: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: oscidisc_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing artifacts in {}: expected {}", dir.display(), expected.join(", "))]
    MissingArtifacts { dir: PathBuf, expected: Vec<String> },

    #[error("sweep cell {cell} failed: {blowups} of {trials} trials blew up")]
    CellFailed {
        cell: usize,
        blowups: usize,
        trials: usize,
    },
}

impl RunError {
    /// Process exit status: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

/// Tags core errors with the pipeline stage that raised them.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> RunResult<T>;
}

impl<T> StageExt<T> for oscidisc_core::Result<T> {
    fn stage(self, stage: &'static str) -> RunResult<T> {
        self.map_err(|source| RunError::Pipeline { stage, source })
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RunError {
    let path = path.into();
    move |source| RunError::Io { path, source }
}
