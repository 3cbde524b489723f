use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::Json;
use serde::{Deserialize, Serialize};

use crate::{ApiError, AppState};

#[derive(Debug, Serialize)]
struct VideoSummary<'a> {
    video_id: &'a str,
    fps: f64,
    frame_count: u64,
    duration_s: f64,
    keyframes: usize,
    has_sequence: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence_stride: Option<u64>,
}

pub(crate) async fn list(State(state): State<AppState>) -> impl IntoResponse {
    let c = state.corpus();
    let mut counts = vec![0usize; c.store.videos().len()];
    for r in c.store.rows() {
        counts[r.video] += 1;
    }
    let videos: Vec<VideoSummary> = c
        .store
        .videos()
        .iter()
        .zip(counts)
        .map(|(v, keyframes)| VideoSummary {
            video_id: &v.video_id,
            fps: v.fps,
            frame_count: v.frame_count,
            duration_s: v.duration_s,
            keyframes,
            has_sequence: v.sequence.is_some(),
            sequence_stride: v.sequence.as_ref().map(|s| s.stride),
        })
        .collect();
    Json(serde_json::json!({ "videos": videos })).into_response()
}

#[derive(Debug, Deserialize)]
pub(crate) struct NeighborQuery {
    frame: u64,
    /// Half-width in frames.
    #[serde(default)]
    span: u64,
}

#[derive(Debug, Serialize)]
struct FrameRef {
    frame_index: u64,
    timestamp_s: f64,
    is_keyframe: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    thumbnail_url: Option<String>,
}

#[derive(Debug, Serialize)]
struct NeighborResponse {
    video_id: String,
    fps: f64,
    pivot_frame: u64,
    span: u64,
    /// `sequence` (strided grid) or `keyframes`.
    source: &'static str,
    frames: Vec<FrameRef>,
}

/// Frames in `[frame − span, frame + span]`, clamped to the video: the strided
/// sequence grid when the video has one, its keyframes otherwise. When nothing
/// falls in range the pivot frame itself is returned.
pub(crate) async fn neighbors(
    State(state): State<AppState>,
    Path(video_id): Path<String>,
    query: Result<Query<NeighborQuery>, QueryRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::malformed(e.body_text()))?;
    let c = state.corpus();
    let video = c.store.video_by_id(&video_id)?;
    if q.frame > video.last_frame() {
        return Err(ApiError::not_found(format!(
            "frame {} outside video `{video_id}` ({} frames)",
            q.frame, video.frame_count
        )));
    }
    let lo = q.frame.saturating_sub(q.span);
    let hi = q.frame.saturating_add(q.span).min(video.last_frame());
    let (source, mut frames): (_, Vec<u64>) = match &video.sequence {
        Some(seq) => ("sequence", (lo.div_ceil(seq.stride)..=hi / seq.stride).map(|k| k * seq.stride).collect()),
        None => (
            "keyframes",
            c.store
                .rows()
                .iter()
                .filter(|r| c.store.video(r.video).video_id == video_id && (lo..=hi).contains(&r.frame_index))
                .map(|r| r.frame_index)
                .collect(),
        ),
    };
    if frames.is_empty() {
        frames.push(q.frame);
    }
    let frames = frames
        .into_iter()
        .map(|f| {
            let is_keyframe = c.store.row_of(&video_id, f).is_some();
            FrameRef {
                frame_index: f,
                timestamp_s: video.timestamp(f),
                is_keyframe,
                thumbnail_url: if is_keyframe { c.thumbnail_url(&video_id, f) } else { None },
            }
        })
        .collect();
    Ok(Json(NeighborResponse {
        video_id: video.video_id.clone(),
        fps: video.fps,
        pivot_frame: q.frame,
        span: q.span,
        source,
        frames,
    }))
}

pub(crate) async fn thumbnail(
    State(state): State<AppState>,
    Path((video_id, frame)): Path<(String, String)>,
) -> Result<impl IntoResponse, ApiError> {
    let frame: u64 = frame
        .parse()
        .map_err(|_| ApiError::malformed(format!("frame index `{frame}` is not a number")))?;
    let c = state.corpus();
    let path = c
        .thumbnail_path(&video_id, frame)
        .ok_or_else(|| ApiError::not_found(format!("no thumbnails for video `{video_id}`")))?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|_| ApiError::not_found(format!("no thumbnail for `{video_id}` frame {frame}")))?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes))
}
