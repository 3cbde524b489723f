use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied something malformed (bad hash, wrong dimension, empty raster).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("ingestion failed for video `{video_id}` ({field}): {message}")]
    Ingest {
        video_id: String,
        field: &'static str,
        message: String,
    },

    #[error("corpus load failed: {0}")]
    Load(String),

    #[error("not found: {0}")]
    NotFound(String),

    /// The video exists but lacks the data an operation needs
    /// (e.g. per-frame sequence embeddings for temporal search).
    #[error("capability unavailable: {0}")]
    Capability(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error {
        let context = format!("{}: {}", context.into(), path.display());
        move |source| Error::Io { context, source }
    }

    pub(crate) fn json(context: impl Into<String>, path: &std::path::Path) -> impl FnOnce(serde_json::Error) -> Error {
        let context = format!("{}: {}", context.into(), path.display());
        move |source| Error::Json { context, source }
    }

    pub(crate) fn ingest(video_id: &str, field: &'static str, message: impl Into<String>) -> Error {
        Error::Ingest {
            video_id: video_id.to_string(),
            field,
            message: message.into(),
        }
    }
}
