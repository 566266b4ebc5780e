use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: record {record}: {message}")]
    MalformedRecord {
        path: PathBuf,
        /// 1-based line or record index.
        record: usize,
        message: String,
    },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("backend {backend}: {message}")]
    Backend { backend: String, message: String },

    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Divergence { epoch: usize, step: usize, loss: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("interval {interval} holds {available} pairs, {requested} requested")]
    InsufficientPairs {
        interval: String,
        available: usize,
        requested: usize,
    },

    #[error("unknown pair id {0:?}")]
    UnknownPair(String),

    #[error("batch {0:?} is closed")]
    ClosedBatch(String),

    #[error("unknown batch {0:?}")]
    UnknownBatch(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn backend(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Backend {
            backend: backend.into(),
            message: message.into(),
        }
    }
}
