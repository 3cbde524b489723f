//! Bidirectional temporal search around a pivot frame.
//!
//! For every window size `w` the start boundary is searched in `[t(p) − w, t(p)]`
//! and the end boundary in `[t(p), t(p) + w]`. Inside each range every strided
//! frame is scored as `c = λ_s·s + λ_t·t`, where `s` is the cosine similarity to
//! the sub-query and `t = 1 − min(1, 2σ)` is a stability score from the
//! population standard deviation `σ` of the frame's similarities to its
//! temporal neighbors. The best frame over all windows wins each side.

mod split;

use serde::{Deserialize, Serialize};

pub use split::split_query;

use crate::error::{Error, Result};
use crate::store::{SeqFrame, Store};
use crate::vector::{dot, normalized};

/// Typical moment length range; results outside it carry a warning.
pub const MOMENT_PRIOR_S: (f64, f64) = (2.0, 20.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbtsParams {
    /// Half-ranges in seconds.
    pub windows_s: Vec<f64>,
    pub lambda_s: f64,
    pub lambda_t: f64,
    /// Neighbors on each side (in strided positions) used for stability.
    pub neighborhood_radius: usize,
}

impl Default for AbtsParams {
    fn default() -> Self {
        Self {
            windows_s: vec![10.0, 15.0, 20.0],
            lambda_s: 0.7,
            lambda_t: 0.3,
            neighborhood_radius: 2,
        }
    }
}

impl AbtsParams {
    /// Validates and rescales the weights so they sum to 1.
    pub fn new(windows_s: Vec<f64>, lambda_s: f64, lambda_t: f64, neighborhood_radius: usize) -> Result<Self> {
        Self { windows_s, lambda_s, lambda_t, neighborhood_radius }.normalized()
    }

    pub fn normalized(mut self) -> Result<Self> {
        if self.windows_s.is_empty() {
            return Err(Error::Input("at least one window is required".into()));
        }
        if let Some(w) = self.windows_s.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Input(format!("window sizes must be positive, got {w}")));
        }
        let (ls, lt) = (self.lambda_s, self.lambda_t);
        if ls.is_nan() || lt.is_nan() || ls < 0.0 || lt < 0.0 || ls + lt <= 0.0 {
            return Err(Error::Input(format!(
                "weights must be non-negative with a positive sum, got λs={} λt={}",
                self.lambda_s, self.lambda_t
            )));
        }
        if self.neighborhood_radius == 0 {
            return Err(Error::Input("neighborhood_radius must be at least 1".into()));
        }
        let sum = self.lambda_s + self.lambda_t;
        self.lambda_s /= sum;
        self.lambda_t /= sum;
        Ok(self)
    }
}

/// A scored frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCandidate {
    pub frame_index: u64,
    pub similarity: f32,
    pub stability: f32,
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotRef {
    pub video_id: String,
    pub frame_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub video_id: String,
    pub pivot_frame: u64,
    pub f_s: u64,
    pub f_e: u64,
    pub t_s: f64,
    pub t_e: f64,
    pub confidence_start: f32,
    pub confidence_end: f32,
    pub window_start_s: f64,
    pub window_end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Best start/end candidate found with one window size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub window_s: f64,
    /// Inclusive strided-frame range searched for the start boundary.
    pub start_range: [u64; 2],
    pub end_range: [u64; 2],
    pub start: BoundaryCandidate,
    pub end: BoundaryCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalOutcome {
    pub moment: MomentResult,
    pub windows: Vec<WindowDiagnostics>,
}

/// Cosine similarity.
pub fn similarity(e_q: &[f32], e_i: &[f32]) -> Result<f32> {
    crate::vector::cosine(e_q, e_i)
}

/// `1 − min(1, 2σ)` over the similarities of `e_i` to each neighbor (population σ).
/// An empty neighborhood scores 0.
pub fn stability(neighbors: &[&[f32]], e_i: &[f32]) -> f32 {
    let sims: Vec<f64> = neighbors.iter().map(|n| dot(n, e_i) as f64).collect();
    stability_of_similarities(&sims)
}

pub fn stability_of_similarities(sims: &[f64]) -> f32 {
    if sims.is_empty() {
        return 0.0;
    }
    let n = sims.len() as f64;
    let mean = sims.iter().sum::<f64>() / n;
    let var = sims.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    (1.0 - (2.0 * var.sqrt()).min(1.0)).clamp(0.0, 1.0) as f32
}

/// Scores every frame of an ordered strided list. Neighbors of frame `i` are
/// the frames within `neighborhood_radius` positions of it, excluding itself.
pub fn score_frames(e_q: &[f32], frames: &[SeqFrame<'_>], params: &AbtsParams) -> Vec<BoundaryCandidate> {
    let r = params.neighborhood_radius;
    (0..frames.len())
        .map(|i| {
            let e_i = frames[i].embedding;
            let s = dot(e_q, e_i);
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(frames.len() - 1);
            let neighbors: Vec<&[f32]> = (lo..=hi).filter(|&j| j != i).map(|j| frames[j].embedding).collect();
            let t = stability(&neighbors, e_i);
            BoundaryCandidate {
                frame_index: frames[i].frame_index,
                similarity: s,
                stability: t,
                confidence: (params.lambda_s * s as f64 + params.lambda_t * t as f64) as f32,
            }
        })
        .collect()
}

/// Highest-confidence frame; the earliest one on ties. `None` for an empty list.
pub fn adaptive_search(e_q: &[f32], frames: &[SeqFrame<'_>], params: &AbtsParams) -> Option<BoundaryCandidate> {
    score_frames(e_q, frames, params)
        .into_iter()
        .reduce(|best, c| if c.confidence > best.confidence { c } else { best })
}

struct Pick {
    window_s: f64,
    cand: BoundaryCandidate,
}

/// Higher confidence, then smaller window, then earlier frame.
fn better(a: &Pick, b: &Pick) -> bool {
    a.cand
        .confidence
        .total_cmp(&b.cand.confidence)
        .then_with(|| b.window_s.total_cmp(&a.window_s))
        .then_with(|| b.cand.frame_index.cmp(&a.cand.frame_index))
        .is_gt()
}

fn side_frames<'a>(store: &'a Store, video_id: &str, pivot: u64, t_lo: f64, t_hi: f64) -> Result<Vec<SeqFrame<'a>>> {
    let frames = store.frames_in_time_range(video_id, t_lo, t_hi)?;
    if !frames.is_empty() {
        return Ok(frames);
    }
    // No strided frame in range: the pivot stands in with its nearest strided embedding.
    let mut nearest = store.nearest_strided_frame(video_id, pivot)?;
    let video = store.video_by_id(video_id)?;
    nearest.frame_index = pivot;
    nearest.timestamp_s = video.timestamp(pivot);
    Ok(vec![nearest])
}

/// Locates moment boundaries around `pivot` for the start/end sub-query embeddings.
pub fn temporal_search(
    q_start: &[f32],
    q_end: &[f32],
    pivot: &PivotRef,
    store: &Store,
    params: &AbtsParams,
) -> Result<TemporalOutcome> {
    let params = params.clone().normalized()?;
    let video = store.video_by_id(&pivot.video_id)?;
    if pivot.frame_index > video.last_frame() {
        return Err(Error::Input(format!(
            "pivot frame {} outside video `{}` ({} frames)",
            pivot.frame_index, video.video_id, video.frame_count
        )));
    }
    if !store.has_sequence(&video.video_id) {
        return Err(Error::Capability(format!(
            "video `{}` has no sequence embeddings; temporal search unavailable",
            video.video_id
        )));
    }
    for q in [q_start, q_end] {
        if q.len() != store.dim() {
            return Err(Error::DimensionMismatch { expected: store.dim(), actual: q.len() });
        }
    }
    let q_start = normalized(q_start)?;
    let q_end = normalized(q_end)?;

    let p = pivot.frame_index;
    let t_p = video.timestamp(p);
    let mut best_start: Option<Pick> = None;
    let mut best_end: Option<Pick> = None;
    let mut windows = Vec::with_capacity(params.windows_s.len());

    for &w in &params.windows_s {
        let start_frames = side_frames(store, &video.video_id, p, t_p - w, t_p)?;
        let end_frames = side_frames(store, &video.video_id, p, t_p, t_p + w)?;
        let s = adaptive_search(&q_start, &start_frames, &params).expect("start range is never empty");
        let e = adaptive_search(&q_end, &end_frames, &params).expect("end range is never empty");
        windows.push(WindowDiagnostics {
            window_s: w,
            start_range: [start_frames[0].frame_index, start_frames[start_frames.len() - 1].frame_index],
            end_range: [end_frames[0].frame_index, end_frames[end_frames.len() - 1].frame_index],
            start: s,
            end: e,
        });
        let sp = Pick { window_s: w, cand: s };
        if best_start.as_ref().is_none_or(|b| better(&sp, b)) {
            best_start = Some(sp);
        }
        let ep = Pick { window_s: w, cand: e };
        if best_end.as_ref().is_none_or(|b| better(&ep, b)) {
            best_end = Some(ep);
        }
    }

    let (s, e) = (best_start.expect("windows non-empty"), best_end.expect("windows non-empty"));
    let t_s = video.timestamp(s.cand.frame_index);
    let t_e = video.timestamp(e.cand.frame_index);
    let duration = t_e - t_s;
    let warning = (duration < MOMENT_PRIOR_S.0 || duration > MOMENT_PRIOR_S.1).then(|| {
        format!(
            "moment length {duration:.2}s is outside the typical {}–{}s range",
            MOMENT_PRIOR_S.0, MOMENT_PRIOR_S.1
        )
    });
    Ok(TemporalOutcome {
        moment: MomentResult {
            video_id: video.video_id.clone(),
            pivot_frame: p,
            f_s: s.cand.frame_index,
            f_e: e.cand.frame_index,
            t_s,
            t_e,
            confidence_start: s.cand.confidence,
            confidence_end: e.cand.confidence,
            window_start_s: s.window_s,
            window_end_s: e.window_s,
            warning,
        },
        windows,
    })
}
