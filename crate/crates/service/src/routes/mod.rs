pub(crate) mod annotations;
pub(crate) mod search;
pub(crate) mod temporal;
pub(crate) mod videos;

use axum::extract::State;
use axum::http::Uri;
use axum::Json;
use serde_json::{json, Value};

use crate::{ApiError, AppState, Corpus};

pub(crate) async fn health(State(state): State<AppState>) -> Json<Value> {
    let c = state.corpus();
    Json(json!({
        "status": "ok",
        "videos": c.store.videos().len(),
        "keyframes": c.store.len(),
        "dim": c.store.dim(),
        "index_mode": c.index_mode(),
        "text_queries": state.has_provider(),
    }))
}

pub(crate) async fn reload(State(state): State<AppState>) -> Result<Json<Value>, ApiError> {
    let _guard = state.inner.reload.lock().await;
    let current = state.corpus();
    let Some(manifest) = current.manifest.clone() else {
        return Err(ApiError::new(
            axum::http::StatusCode::CONFLICT,
            "capability_unavailable",
            "corpus was not loaded from a manifest",
        ));
    };
    let mode = state.inner.index_mode;
    let corpus = tokio::task::spawn_blocking(move || Corpus::load(&manifest, mode)).await??;
    let body = json!({
        "videos": corpus.store.videos().len(),
        "keyframes": corpus.store.len(),
        "index_mode": corpus.index_mode(),
    });
    state.replace_corpus(corpus);
    Ok(Json(body))
}

pub(crate) async fn not_found(uri: Uri) -> ApiError {
    ApiError::not_found(format!("no route for {}", uri.path()))
}
