use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::Json;
use serde::Deserialize;

use crate::error::parse_body;
use crate::{ApiError, AppState, NewAnnotation};

pub(crate) async fn create(State(state): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let new: NewAnnotation = parse_body(&body)?;
    if new.session_id.trim().is_empty() {
        return Err(ApiError::malformed("session_id is empty"));
    }
    let corpus = state.corpus();
    let video = corpus.store.video_by_id(&new.video_id)?;
    if new.f_s > new.f_e {
        return Err(ApiError::invalid_boundaries(format!("f_s {} is after f_e {}", new.f_s, new.f_e)));
    }
    if new.f_e > video.last_frame() {
        return Err(ApiError::invalid_boundaries(format!(
            "f_e {} outside video `{}` ({} frames)",
            new.f_e, video.video_id, video.frame_count
        )));
    }
    let log = state.annotations();
    let record = tokio::task::spawn_blocking(move || log.lock().expect("annotation log lock").append(new))
        .await?
        .map_err(|e| ApiError::internal(format!("writing annotation: {e}")))?;
    Ok((StatusCode::CREATED, Json(record)))
}

#[derive(Debug, Deserialize)]
pub(crate) struct ListQuery {
    session_id: Option<String>,
}

pub(crate) async fn list(
    State(state): State<AppState>,
    query: Result<Query<ListQuery>, QueryRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::malformed(e.body_text()))?;
    let records = state.annotations().lock().expect("annotation log lock").list(q.session_id.as_deref());
    Ok(Json(serde_json::json!({ "annotations": records })))
}
