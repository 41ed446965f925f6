//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },

    #[error("score optimization diverged: non-finite loss at iteration {iter}")]
    ScoreDiverged { iter: usize },

    #[error("unknown benchmark function `{0}`")]
    UnknownFunction(String),

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("missing artifact for stage `{stage}`: {path} (run `{hint}` first)")]
    MissingArtifact {
        stage: &'static str,
        path: PathBuf,
        hint: String,
    },

    #[error(
        "stale artifact {path}: embedded config hash {found} does not match \
         expected {expected}; rerun `{stage}`"
    )]
    StaleArtifact {
        stage: &'static str,
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind string, used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::EmptyInput(_) => "empty_input",
            Error::InvalidConfig(_) => "invalid_config",
            Error::NanLoss { .. } => "nan_loss",
            Error::ScoreDiverged { .. } => "score_diverged",
            Error::UnknownFunction(_) => "unknown_function",
            Error::Csv { .. } => "csv",
            Error::Checkpoint(_) => "checkpoint",
            Error::MissingArtifact { .. } => "missing_artifact",
            Error::StaleArtifact { .. } => "stale_artifact",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
