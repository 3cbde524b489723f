use axum::body::Bytes;
use axum::extract::State;
use axum::Json;
use grab_core::temporal::{split_query, temporal_search, AbtsParams, PivotRef, TemporalOutcome};
use grab_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::parse_body;
use crate::{ApiError, AppState};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamOverrides {
    windows_s: Option<Vec<f64>>,
    lambda_s: Option<f64>,
    lambda_t: Option<f64>,
    neighborhood_radius: Option<usize>,
}

/// Each side takes exactly one source: its own embedding, its own text, or
/// the shared `query_text` split at `split_hint` (a byte offset).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemporalRequest {
    pivot: PivotRef,
    query_start_embedding: Option<Vec<f32>>,
    query_end_embedding: Option<Vec<f32>>,
    query_start_text: Option<String>,
    query_end_text: Option<String>,
    query_text: Option<String>,
    split_hint: Option<usize>,
    #[serde(default)]
    params: ParamOverrides,
}

#[derive(Debug, Serialize)]
struct SubQueries {
    start_text: String,
    end_text: String,
}

#[derive(Debug, Serialize)]
struct TemporalResponse {
    #[serde(flatten)]
    outcome: TemporalOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<SubQueries>,
}

enum Source {
    Embedding(Vec<f32>),
    Text(String),
}

fn pick(side: &str, emb: Option<Vec<f32>>, text: Option<String>, shared: Option<&String>) -> Result<Source, ApiError> {
    match (emb, text, shared) {
        (Some(e), None, None) => Ok(Source::Embedding(e)),
        (None, Some(t), None) => Ok(Source::Text(t)),
        (None, None, Some(t)) => Ok(Source::Text(t.clone())),
        (None, None, None) => Err(ApiError::malformed(format!(
            "no {side} sub-query: give query_{side}_embedding, query_{side}_text or query_text"
        ))),
        _ => Err(ApiError::malformed(format!("more than one {side} sub-query given"))),
    }
}

pub(crate) async fn temporal(State(state): State<AppState>, body: Bytes) -> Result<Json<impl Serialize>, ApiError> {
    let req: TemporalRequest = parse_body(&body)?;
    if req.split_hint.is_some() && req.query_text.is_none() {
        return Err(ApiError::malformed("split_hint requires query_text"));
    }
    let defaults = AbtsParams::default();
    let o = req.params;
    let params = AbtsParams::new(
        o.windows_s.unwrap_or(defaults.windows_s),
        o.lambda_s.unwrap_or(defaults.lambda_s),
        o.lambda_t.unwrap_or(defaults.lambda_t),
        o.neighborhood_radius.unwrap_or(defaults.neighborhood_radius),
    )?;

    let split = req.query_text.as_ref().map(|t| {
        let (start_text, end_text) = split_query(t, req.split_hint);
        SubQueries { start_text, end_text }
    });
    let start = pick("start", req.query_start_embedding, req.query_start_text, split.as_ref().map(|s| &s.start_text))?;
    let end = pick("end", req.query_end_embedding, req.query_end_text, split.as_ref().map(|s| &s.end_text))?;

    let corpus = state.corpus();
    let video = corpus.store.video_by_id(&req.pivot.video_id)?;
    if req.pivot.frame_index > video.last_frame() {
        return Err(ApiError::not_found(format!(
            "pivot frame {} outside video `{}` ({} frames)",
            req.pivot.frame_index, video.video_id, video.frame_count
        )));
    }
    if !corpus.store.has_sequence(&video.video_id) {
        return Err(Error::Capability(format!(
            "video `{}` has no sequence embeddings; temporal search unavailable",
            video.video_id
        ))
        .into());
    }

    let dim = corpus.store.dim();
    let mut resolved = Vec::with_capacity(2);
    for src in [start, end] {
        let v = match src {
            Source::Embedding(e) => e,
            Source::Text(t) if t.trim().is_empty() => return Err(ApiError::malformed("sub-query text is empty")),
            Source::Text(t) => state.embed(&t, dim).await?,
        };
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: v.len() }.into());
        }
        resolved.push(v);
    }
    let q_end = resolved.pop().expect("two sides");
    let q_start = resolved.pop().expect("two sides");
    let pivot = req.pivot;
    let outcome =
        tokio::task::spawn_blocking(move || temporal_search(&q_start, &q_end, &pivot, &corpus.store, &params)).await??;
    Ok(Json(TemporalResponse { outcome, split }))
}
