//! JSON-over-HTTP facade for the interactive retrieval session.
//!
//! | route | purpose |
//! |---|---|
//! | `POST /api/v1/search` | top-K keyframes, optionally reranked |
//! | `POST /api/v1/temporal` | moment boundaries around a pivot |
//! | `GET /api/v1/videos` | corpus listing |
//! | `GET /api/v1/videos/{id}/neighbors?frame=F&span=S` | frames in `[F−S, F+S]` |
//! | `POST /api/v1/annotations`, `GET /api/v1/annotations?session_id=` | annotation log |
//! | `POST /api/v1/reload` | reopen the manifest and swap the snapshot |
//! | `GET /api/v1/health` | liveness and corpus summary |
//! | `GET /thumbnails/{video_id}/{frame_index}` | keyframe images |
//!
//! Errors are `{"error": {"code", "message"}}`. Retrieval is stateless; the
//! annotation log is the only mutable state.

pub mod annotations;
pub mod config;
pub mod corpus;
pub mod error;
pub mod provider;
mod routes;

use std::sync::{Arc, Mutex, RwLock};

use axum::routing::{get, post};
use axum::Router;
use grab_core::index::IndexMode;

pub use annotations::{AnnotationLog, AnnotationRecord, NewAnnotation};
pub use config::{ConfigError, ServiceConfig};
pub use corpus::Corpus;
pub use error::ApiError;
pub use provider::{EmbedClient, ProviderError};

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Shared>,
}

struct Shared {
    corpus: RwLock<Arc<Corpus>>,
    /// Mode requested at startup, reused on reload.
    index_mode: Option<IndexMode>,
    provider: Option<EmbedClient>,
    annotations: Arc<Mutex<AnnotationLog>>,
    reload: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(corpus: Corpus, provider: Option<EmbedClient>, annotations: AnnotationLog) -> Self {
        Self::with_index_mode(corpus, None, provider, annotations)
    }

    pub fn with_index_mode(
        corpus: Corpus,
        index_mode: Option<IndexMode>,
        provider: Option<EmbedClient>,
        annotations: AnnotationLog,
    ) -> Self {
        Self {
            inner: Arc::new(Shared {
                corpus: RwLock::new(Arc::new(corpus)),
                index_mode,
                provider,
                annotations: Arc::new(Mutex::new(annotations)),
                reload: tokio::sync::Mutex::new(()),
            }),
        }
    }

    /// The current snapshot.
    pub fn corpus(&self) -> Arc<Corpus> {
        self.inner.corpus.read().expect("corpus lock").clone()
    }

    pub fn replace_corpus(&self, corpus: Corpus) {
        *self.inner.corpus.write().expect("corpus lock") = Arc::new(corpus);
    }

    pub(crate) async fn embed(&self, text: &str, dim: usize) -> Result<Vec<f32>, ProviderError> {
        match &self.inner.provider {
            Some(p) => p.embed(text, dim).await,
            None => Err(ProviderError::NotConfigured),
        }
    }

    pub(crate) fn has_provider(&self) -> bool {
        self.inner.provider.is_some()
    }

    pub(crate) fn annotations(&self) -> Arc<Mutex<AnnotationLog>> {
        self.inner.annotations.clone()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/health", get(routes::health))
        .route("/api/v1/search", post(routes::search::search))
        .route("/api/v1/temporal", post(routes::temporal::temporal))
        .route("/api/v1/videos", get(routes::videos::list))
        .route("/api/v1/videos/{id}/neighbors", get(routes::videos::neighbors))
        .route("/api/v1/annotations", post(routes::annotations::create).get(routes::annotations::list))
        .route("/api/v1/reload", post(routes::reload))
        .route("/thumbnails/{video_id}/{frame_index}", get(routes::videos::thumbnail))
        .fallback(routes::not_found)
        .with_state(state)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("loading corpus: {0}")]
    Corpus(#[from] grab_core::Error),
    #[error("opening annotation log {path}: {source}")]
    Annotations { path: String, source: std::io::Error },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server: {0}")]
    Server(std::io::Error),
}

/// Builds the application state described by `config`.
pub async fn build_state(config: &ServiceConfig) -> Result<AppState, ServeError> {
    let manifest = config.manifest.clone();
    let mode = config.index_mode;
    let corpus = tokio::task::spawn_blocking(move || Corpus::load(&manifest, mode))
        .await
        .expect("corpus loader panicked")?;
    let log = AnnotationLog::open(&config.annotation_log).map_err(|source| ServeError::Annotations {
        path: config.annotation_log.display().to_string(),
        source,
    })?;
    let provider = config.embed_provider_url.as_deref().map(EmbedClient::new).transpose()?;
    tracing::info!(
        videos = corpus.store.videos().len(),
        keyframes = corpus.store.len(),
        index = ?corpus.index_mode(),
        "corpus loaded"
    );
    Ok(AppState::with_index_mode(corpus, mode, provider, log))
}

/// Runs the service until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let state = build_state(&config).await?;
    let listener = tokio::net::TcpListener::bind(config.listen_addr)
        .await
        .map_err(|source| ServeError::Bind { addr: config.listen_addr.to_string(), source })?;
    tracing::info!("listening on {}", config.listen_addr);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Server)
}
