use std::path::PathBuf;

use crate::ndtensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("graph {graph}: {message}")]
    Load { graph: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("no informative structure")]
    NoStructure,
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Tensor(_) => "tensor",
            Error::Load { .. } => "load",
            Error::Io { .. } => "io",
            Error::InvalidGraph(_) => "invalid_graph",
            Error::NoStructure => "no_structure",
            Error::Generation(_) => "generation",
            Error::Dimension(_) => "dimension",
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::Divergence { .. } => "divergence",
            Error::Parse(_) => "parse",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
