use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::Json;
use grab_core::index::{search_top_m, IndexMode};
use grab_core::rerank::{rerank, RerankParams};
use grab_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::parse_body;
use crate::{ApiError, AppState, Corpus};

pub const DEFAULT_TOP_K: usize = 20;
pub const MAX_TOP_K: usize = 500;
/// First-stage candidates handed to the reranker.
pub const DEFAULT_TOP_M: usize = 100;
pub const MAX_TOP_M: usize = 10_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchRequest {
    query_text: Option<String>,
    query_embedding: Option<Vec<f32>>,
    #[serde(default = "default_top_k")]
    top_k: usize,
    #[serde(default = "default_true")]
    rerank: bool,
    top_m: Option<usize>,
    refine_k: Option<usize>,
    expand_m: Option<usize>,
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize)]
struct Hit {
    rank: usize,
    video_id: String,
    frame_index: u64,
    timestamp_s: f64,
    shot_id: usize,
    score: f32,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s1: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s2: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_final: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thumbnail_url: Option<String>,
}

#[derive(Debug, Serialize)]
struct Metadata {
    query_source: &'static str,
    top_k: usize,
    candidates: usize,
    reranked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    rerank_params: Option<RerankParams>,
    index_mode: Option<IndexMode>,
    corpus_keyframes: usize,
    dim: usize,
    elapsed_ms: f64,
}

#[derive(Debug, Serialize)]
struct SearchResponse {
    hits: Vec<Hit>,
    metadata: Metadata,
}

pub(crate) async fn search(State(state): State<AppState>, body: Bytes) -> Result<Json<impl Serialize>, ApiError> {
    let started = Instant::now();
    let req: SearchRequest = parse_body(&body)?;
    if !(1..=MAX_TOP_K).contains(&req.top_k) {
        return Err(ApiError::malformed(format!("top_k must be in 1..={MAX_TOP_K}, got {}", req.top_k)));
    }
    let top_m = req.top_m.unwrap_or(DEFAULT_TOP_M.max(req.top_k));
    if top_m < req.top_k || top_m > MAX_TOP_M {
        return Err(ApiError::malformed(format!("top_m must be in {}..={MAX_TOP_M}, got {top_m}", req.top_k)));
    }
    let params = RerankParams {
        refine_k: req.refine_k.unwrap_or(RerankParams::default().refine_k),
        expand_m: req.expand_m.unwrap_or(RerankParams::default().expand_m),
        ..RerankParams::default()
    };
    params.validate()?;

    let corpus = state.corpus();
    let dim = corpus.store.dim();
    let (query, source) = match (req.query_embedding, req.query_text) {
        (Some(e), None) => (e, "embedding"),
        (None, Some(t)) if t.trim().is_empty() => return Err(ApiError::malformed("query_text is empty")),
        (None, Some(t)) => (state.embed(&t, dim).await?, "text"),
        _ => return Err(ApiError::malformed("exactly one of query_text and query_embedding is required")),
    };
    if query.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: query.len() }.into());
    }

    let (top_k, reranked) = (req.top_k, req.rerank);
    let snapshot = corpus.clone();
    let (hits, candidates) =
        tokio::task::spawn_blocking(move || run(&snapshot, &query, top_k, top_m, reranked.then_some(params))).await??;
    Ok(Json(SearchResponse {
        hits,
        metadata: Metadata {
            query_source: source,
            top_k,
            candidates,
            reranked,
            rerank_params: reranked.then_some(params),
            index_mode: corpus.index_mode(),
            corpus_keyframes: corpus.store.len(),
            dim,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    }))
}

/// Returns the hits and the number of first-stage candidates.
fn run(
    corpus: &Corpus,
    query: &[f32],
    top_k: usize,
    top_m: usize,
    params: Option<RerankParams>,
) -> Result<(Vec<Hit>, usize), ApiError> {
    let Some(index) = &corpus.index else {
        grab_core::vector::normalized(query)?;
        return Ok((Vec::new(), 0));
    };
    let store = &corpus.store;
    let hit = |row: usize, rank, score| {
        let meta = store.row_meta(row);
        let video_id = &store.video(meta.video).video_id;
        Hit {
            rank,
            video_id: video_id.clone(),
            frame_index: meta.frame_index,
            timestamp_s: meta.timestamp_s,
            shot_id: meta.shot_id,
            score,
            initial_rank: None,
            s1: None,
            s2: None,
            s_final: None,
            thumbnail_url: corpus.thumbnail_url(video_id, meta.frame_index),
        }
    };
    match params {
        None => {
            let found = search_top_m(index, store, query, top_k)?;
            let n = found.len();
            Ok((found.iter().map(|h| hit(h.row, h.rank, h.score)).collect(), n))
        }
        Some(p) => {
            let found = search_top_m(index, store, query, top_m)?;
            let n = found.len();
            let hits = rerank(query, &found, store, &p)?
                .into_iter()
                .take(top_k)
                .map(|r| Hit {
                    initial_rank: Some(r.initial_rank),
                    s1: Some(r.s1),
                    s2: Some(r.s2),
                    s_final: Some(r.s_final),
                    ..hit(r.row, r.rank, r.score)
                })
                .collect();
            Ok((hits, n))
        }
    }
}
