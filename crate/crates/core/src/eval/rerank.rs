use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{at_cosine, mean, orthogonal_unit, report_json, run_trials, unit_vec, EvalReport};
use crate::error::{Error, Result};
use crate::index::{build_index, search_top_m, IndexMode};
use crate::rerank::{rerank, RerankParams};
use crate::store::{KeyframeEntry, MemoryVideo, Store};

/// Planted-cluster layout. The target sits at raw rank `distractors + 1`
/// inside a coherent cluster; each distractor is a lone match whose scene
/// neighbors are only weakly related to the query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerankScenario {
    pub dim: usize,
    /// Candidate list length M; also the corpus size.
    pub candidates: usize,
    pub distractors: usize,
    /// Cluster size, target included.
    pub cluster_size: usize,
    /// Scene neighbors planted around each distractor.
    pub scene_mates: usize,
    pub target_sim: f32,
    pub top_distractor_sim: f32,
    /// Query similarity of scene neighbors, drawn uniformly from this range.
    pub scene_sim: (f32, f32),
    /// Cosine of each cluster or scene member's off-query part to its group axis.
    pub coherence: (f32, f32),
}

impl Default for RerankScenario {
    fn default() -> Self {
        Self {
            dim: 64,
            candidates: 100,
            distractors: 5,
            cluster_size: 5,
            scene_mates: 9,
            target_sim: 0.72,
            top_distractor_sim: 0.79,
            scene_sim: (0.25, 0.35),
            coherence: (0.85, 0.95),
        }
    }
}

impl RerankScenario {
    fn planted(&self) -> usize {
        self.distractors * (1 + self.scene_mates) + self.cluster_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.cluster_size == 0 {
            return Err(Error::Input("cluster must contain the target".into()));
        }
        if self.planted() > self.candidates {
            return Err(Error::Input(format!(
                "{} planted vectors exceed {} candidates",
                self.planted(),
                self.candidates
            )));
        }
        if self.dim < self.distractors + 3 {
            return Err(Error::Input(format!("dim {} too small for the layout", self.dim)));
        }
        let lowest_distractor = self.top_distractor_sim - 0.01 * self.distractors.saturating_sub(1) as f32;
        let lowest_mate = self.target_sim - 0.04 - 0.01 * self.cluster_size.saturating_sub(2) as f32;
        if self.distractors > 0 && lowest_distractor <= self.target_sim {
            return Err(Error::Input("distractors must outrank the target".into()));
        }
        if !(self.scene_sim.1 < lowest_mate && lowest_mate > 0.0) {
            return Err(Error::Input("scene neighbors must rank below the cluster".into()));
        }
        if !(0.0 < self.coherence.0 && self.coherence.0 <= self.coherence.1 && self.coherence.1 <= 1.0) {
            return Err(Error::Input("coherence range must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

pub struct RerankFixture {
    pub store: Store,
    pub query: Vec<f32>,
    pub target_row: usize,
    pub cluster_rows: Vec<usize>,
    pub distractor_rows: Vec<usize>,
}

/// Unit vector at cosine `sim` to `q` whose off-query part is at cosine `rho` to `axis`.
fn member(rng: &mut ChaCha8Rng, q: &[f32], axis: &[f32], sim: f32, rho: f32) -> Vec<f32> {
    let noise = orthogonal_unit(rng, &[q, axis]);
    let off = at_cosine(axis, &noise, rho);
    at_cosine(q, &off, sim)
}

pub fn planted_cluster(rng: &mut ChaCha8Rng, sc: &RerankScenario) -> Result<RerankFixture> {
    sc.validate()?;
    let q = unit_vec(rng, sc.dim);
    let c_axis = orthogonal_unit(rng, &[&q]);
    let mut basis: Vec<Vec<f32>> = vec![q.clone(), c_axis.clone()];

    // role: 0 target, 1 cluster mate, 2 distractor, 3 scene mate, 4 background
    let mut vectors: Vec<(u8, Vec<f32>)> = Vec::with_capacity(sc.candidates);
    vectors.push((0, at_cosine(&q, &c_axis, sc.target_sim)));
    for j in 0..sc.cluster_size - 1 {
        let rho = rng.random_range(sc.coherence.0..=sc.coherence.1);
        vectors.push((1, member(rng, &q, &c_axis, sc.target_sim - 0.04 - 0.01 * j as f32, rho)));
    }
    for i in 0..sc.distractors {
        let refs: Vec<&[f32]> = basis.iter().map(Vec::as_slice).collect();
        let u = orthogonal_unit(rng, &refs);
        vectors.push((2, at_cosine(&q, &u, sc.top_distractor_sim - 0.01 * i as f32)));
        for _ in 0..sc.scene_mates {
            let sim = rng.random_range(sc.scene_sim.0..=sc.scene_sim.1);
            let rho = rng.random_range(sc.coherence.0..=sc.coherence.1);
            vectors.push((3, member(rng, &q, &u, sim, rho)));
        }
        basis.push(u);
    }
    let ceiling = sc.scene_sim.0.min(0.5);
    while vectors.len() < sc.candidates {
        let v = unit_vec(rng, sc.dim);
        if crate::vector::dot(&v, &q) < ceiling {
            vectors.push((4, v));
        }
    }
    vectors.shuffle(rng);

    let keyframes = (0..vectors.len())
        .map(|i| KeyframeEntry { frame_index: i as u64, shot_id: i, phash: None })
        .collect();
    let store = Store::from_videos(vec![MemoryVideo {
        video_id: "planted".into(),
        fps: 1.0,
        frame_count: vectors.len() as u64,
        dim: sc.dim,
        keyframes,
        keyframe_values: vectors.iter().flat_map(|(_, v)| v.iter().copied()).collect(),
        sequence: None,
        thumbnail_template: None,
    }])?;
    let rows_with = |roles: &[u8]| -> Vec<usize> {
        vectors.iter().enumerate().filter(|(_, (r, _))| roles.contains(r)).map(|(i, _)| i).collect()
    };
    Ok(RerankFixture {
        target_row: rows_with(&[0])[0],
        cluster_rows: rows_with(&[0, 1]),
        distractor_rows: rows_with(&[2]),
        store,
        query: q,
    })
}

/// Planted-cluster rerank: a trial succeeds when the target ends at rank ≤ 3
/// and moved up (or already held rank 1).
pub fn eval_rerank(seed: u64, trials: usize, sc: &RerankScenario, params: &RerankParams) -> Result<EvalReport> {
    sc.validate()?;
    params.validate()?;
    let (results, ms) = run_trials(seed, trials, |trial, rng| -> Result<serde_json::Value> {
        let fx = planted_cluster(rng, sc)?;
        let index = build_index(&fx.store, IndexMode::Exact)?;
        let hits = search_top_m(&index, &fx.store, &fx.query, sc.candidates)?;
        let reranked = rerank(&fx.query, &hits, &fx.store, params)?;
        let raw_rank = hits.iter().find(|h| h.row == fx.target_row).map(|h| h.rank).expect("target retrieved");
        let new_rank = reranked.iter().find(|h| h.row == fx.target_row).map(|h| h.rank).expect("target kept");
        let ok = new_rank <= 3 && (new_rank < raw_rank || raw_rank == 1);
        Ok(json!({
            "trial": trial,
            "raw_rank": raw_rank,
            "reranked_rank": new_rank,
            "success": ok,
        }))
    });
    let diagnostics = results.into_iter().collect::<Result<Vec<_>>>()?;
    let successes = diagnostics.iter().filter(|d| d["success"] == true).count();
    let rank_of = |key: &str| mean(diagnostics.iter().map(|d| d[key].as_f64().unwrap_or(f64::NAN)));
    let (mean_raw, mean_new) = (rank_of("raw_rank"), rank_of("reranked_rank"));
    let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
    let bar = 0.8;
    Ok(EvalReport {
        scenario: "rerank".into(),
        seed,
        params: json!({ "scenario": report_json(sc), "rerank": params }),
        trials,
        successes,
        success_rate: rate,
        tolerance: 3.0,
        tolerance_unit: "rank".into(),
        bar,
        passed: trials > 0 && rate >= bar && mean_new < mean_raw,
        summary: json!({
            "mean_raw_rank": mean_raw,
            "mean_reranked_rank": mean_new,
            "mean_rank_improved": mean_new < mean_raw,
        }),
        diagnostics,
        wall_clock_ms: ms,
    })
}
