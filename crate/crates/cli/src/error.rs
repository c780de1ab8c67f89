use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot load config '{path}': {source}")]
    Load { path: PathBuf, source: cqad_core::Error },
    #[error("config has {0} violation(s)")]
    Invalid(usize),
    #[error("stage '{stage}' failed: {source}")]
    Stage { stage: &'static str, source: cqad_core::Error },
    #[error("cannot write '{path}': {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for anything the config author must fix, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Load { .. } | CliError::Invalid(_) => 2,
            CliError::Stage { source: cqad_core::Error::Config { .. }, .. } => 2,
            _ => 1,
        }
    }
}

/// Tags a core error with the pipeline stage that raised it.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for cqad_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
