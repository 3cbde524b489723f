//! Global-descriptor reranking of a top-M candidate list.
//!
//! Each candidate descriptor is refined by average-pooling it with its nearest
//! neighbors inside the candidate set; the query is expanded by max-pooling it
//! with the best-ranked candidates. Final score is the mean of
//! `cos(query, refined candidate)` and `cos(expanded query, candidate)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::SearchHit;
use crate::store::Store;
use crate::vector::{dot, normalize_in_place, normalized};

/// Pooling exponent for generalized-mean pooling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GemPower {
    /// Finite p ≥ 1. p = 1 is the arithmetic mean.
    Finite(f64),
    /// Elementwise maximum.
    Infinity,
}

impl GemPower {
    /// Treats any `p ≥ limit` (and `p = ∞`) as max pooling.
    pub fn from_p(p: f64, limit: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Input(format!("GeM exponent must be >= 1, got {p}")));
        }
        Ok(if p.is_infinite() || p >= limit { GemPower::Infinity } else { GemPower::Finite(p) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerankParams {
    /// Neighbors pooled into each refined candidate descriptor.
    pub refine_k: usize,
    /// Top candidates max-pooled into the expanded query.
    pub expand_m: usize,
    /// Exponents at or above this are evaluated as max pooling.
    pub p_limit_threshold: f64,
}

impl Default for RerankParams {
    fn default() -> Self {
        Self {
            refine_k: 10,
            expand_m: 5,
            p_limit_threshold: 1000.0,
        }
    }
}

impl RerankParams {
    pub fn validate(&self) -> Result<()> {
        if self.refine_k == 0 {
            return Err(Error::Input("refine_k must be at least 1".into()));
        }
        if self.expand_m == 0 {
            return Err(Error::Input("expand_m must be at least 1".into()));
        }
        if self.p_limit_threshold.is_nan() || self.p_limit_threshold < 1.0 {
            return Err(Error::Input("p_limit_threshold must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankedHit {
    pub video_id: String,
    pub frame_index: u64,
    pub row: usize,
    /// Raw similarity from the first-stage search.
    pub score: f32,
    /// Position after reranking, 1-based.
    pub rank: usize,
    pub initial_rank: usize,
    pub s1: f32,
    pub s2: f32,
    pub s_final: f32,
}

/// Generalized-mean pooling of equal-length vectors. The result is not normalized.
///
/// For finite p each component is pooled as `sign(m)·|m|^(1/p)` with
/// `m = mean(sign(x)·|x|^p)`, evaluated relative to the component's largest
/// magnitude so large exponents stay finite.
pub fn gem_pool(vectors: &[&[f32]], power: GemPower) -> Result<Vec<f32>> {
    let first = vectors.first().ok_or_else(|| Error::Input("cannot pool an empty set".into()))?;
    let dim = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
    }
    let n = vectors.len() as f64;
    let out = (0..dim)
        .map(|c| match power {
            GemPower::Infinity => vectors.iter().map(|v| v[c]).fold(f32::NEG_INFINITY, f32::max),
            GemPower::Finite(1.0) => (vectors.iter().map(|v| v[c] as f64).sum::<f64>() / n) as f32,
            GemPower::Finite(p) => {
                let scale = vectors.iter().map(|v| (v[c] as f64).abs()).fold(0.0, f64::max);
                if scale == 0.0 {
                    return 0.0;
                }
                let m = vectors
                    .iter()
                    .map(|v| {
                        let x = v[c] as f64 / scale;
                        x.signum() * x.abs().powf(p)
                    })
                    .sum::<f64>()
                    / n;
                (m.signum() * m.abs().powf(1.0 / p) * scale) as f32
            }
        })
        .collect();
    Ok(out)
}

/// Pools and normalizes. A pooled zero vector (e.g. exact cancellation) is returned as zeros.
fn pool_unit(vectors: &[&[f32]], power: GemPower) -> Result<Vec<f32>> {
    let mut v = gem_pool(vectors, power)?;
    if normalize_in_place(&mut v).is_err() {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
    Ok(v)
}

/// Refined descriptor of every vector: mean of itself and its `k` most similar
/// other vectors (ties to the lower `keys` value), re-normalized.
pub fn refine_descriptors(vectors: &[&[f32]], keys: &[usize], k: usize) -> Result<Vec<Vec<f32>>> {
    let n = vectors.len();
    let k = k.min(n.saturating_sub(1));
    (0..n)
        .map(|i| {
            let mut others: Vec<(f32, usize, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dot(vectors[i], vectors[j]), keys[j], j))
                .collect();
            others.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut pool: Vec<&[f32]> = Vec::with_capacity(k + 1);
            pool.push(vectors[i]);
            pool.extend(others.iter().take(k).map(|&(_, _, j)| vectors[j]));
            pool_unit(&pool, GemPower::Finite(1.0))
        })
        .collect()
}

/// Refined descriptors keyed by store row.
pub fn refine_database_descriptors(
    candidates: &[SearchHit],
    store: &Store,
    params: &RerankParams,
) -> Result<HashMap<usize, Vec<f32>>> {
    if candidates.is_empty() {
        return Err(Error::Input("no candidates to refine".into()));
    }
    let vectors: Vec<&[f32]> = candidates.iter().map(|h| store.row(h.row)).collect();
    let keys: Vec<usize> = candidates.iter().map(|h| h.row).collect();
    let refined = refine_descriptors(&vectors, &keys, params.refine_k)?;
    Ok(keys.into_iter().zip(refined).collect())
}

/// Max-pools the query with the first `expand_m` of `ranked` (best first), re-normalized.
pub fn expand_query_vectors(query: &[f32], ranked: &[&[f32]], expand_m: usize) -> Result<Vec<f32>> {
    let mut pool: Vec<&[f32]> = vec![query];
    pool.extend(ranked.iter().take(expand_m).copied());
    pool_unit(&pool, GemPower::Infinity)
}

/// Expanded query from candidates sorted by initial score.
pub fn expand_query(query: &[f32], candidates: &[SearchHit], store: &Store, params: &RerankParams) -> Result<Vec<f32>> {
    let q = normalized(query)?;
    let mut sorted: Vec<&SearchHit> = candidates.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.row.cmp(&b.row)));
    let ranked: Vec<&[f32]> = sorted.iter().map(|h| store.row(h.row)).collect();
    expand_query_vectors(&q, &ranked, params.expand_m)
}

/// Per-candidate (s1, s2, s_final) for unit-length `query` and `vectors`.
///
/// `vectors` must be ordered best-first by initial score; `keys` break
/// neighbor ties during refinement.
pub fn fused_scores(
    query: &[f32],
    vectors: &[&[f32]],
    keys: &[usize],
    refine_k: usize,
    expand_m: usize,
) -> Result<Vec<(f32, f32, f32)>> {
    let refined = refine_descriptors(vectors, keys, refine_k)?;
    let expanded = expand_query_vectors(query, vectors, expand_m)?;
    Ok(refined
        .iter()
        .zip(vectors)
        .map(|(g_dr, g_d)| {
            let s1 = dot(query, g_dr);
            let s2 = dot(&expanded, g_d);
            (s1, s2, (s1 + s2) / 2.0)
        })
        .collect())
}

/// Reranks first-stage candidates. Output is a permutation of the input, sorted
/// by `s_final` descending with ties to the lower row id.
pub fn rerank(query: &[f32], candidates: &[SearchHit], store: &Store, params: &RerankParams) -> Result<Vec<RerankedHit>> {
    params.validate()?;
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    if query.len() != store.dim() {
        return Err(Error::DimensionMismatch { expected: store.dim(), actual: query.len() });
    }
    let q = normalized(query)?;
    let mut sorted: Vec<&SearchHit> = candidates.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.row.cmp(&b.row)));
    let vectors: Vec<&[f32]> = sorted.iter().map(|h| store.row(h.row)).collect();
    let keys: Vec<usize> = sorted.iter().map(|h| h.row).collect();
    let scores = fused_scores(&q, &vectors, &keys, params.refine_k, params.expand_m)?;

    let mut out: Vec<RerankedHit> = sorted
        .iter()
        .zip(scores)
        .map(|(h, (s1, s2, s_final))| RerankedHit {
            video_id: h.video_id.clone(),
            frame_index: h.frame_index,
            row: h.row,
            score: h.score,
            rank: 0,
            initial_rank: h.rank,
            s1,
            s2,
            s_final,
        })
        .collect();
    out.sort_by(|a, b| b.s_final.total_cmp(&a.s_final).then(a.row.cmp(&b.row)));
    for (i, h) in out.iter_mut().enumerate() {
        h.rank = i + 1;
    }
    Ok(out)
}
