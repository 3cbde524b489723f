//! Seeded synthetic scenarios that exercise dedup, reranking and temporal search.
//!
//! All randomness comes from `ChaCha8Rng` (the `rand_chacha` crate). Trial `i`
//! of a run with seed `s` is seeded with `splitmix64(s ^ splitmix64(i))`, so any
//! single trial can be replayed from `(seed, trial)` alone. Trials run in
//! parallel and are reported in trial order.

mod abts;
mod dedup;
mod rerank;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use abts::{eval_abts, planted_moment, AbtsScenario, MomentFixture};
pub use dedup::{eval_dedup, planted_hash_clusters, DedupScenario, HashClusters};
pub use rerank::{eval_rerank, planted_cluster, RerankFixture, RerankScenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Per-trial tolerance, in the unit named by `tolerance_unit`.
    pub tolerance: f64,
    pub tolerance_unit: String,
    /// Required success rate.
    pub bar: f64,
    pub passed: bool,
    pub summary: serde_json::Value,
    pub diagnostics: Vec<serde_json::Value>,
    pub wall_clock_ms: u64,
}

impl EvalReport {
    /// One human-readable line.
    pub fn headline(&self) -> String {
        format!(
            "{:<8} {} {}/{} trials ({:.1}%, bar {:.0}%)",
            self.scenario,
            if self.passed { "PASS" } else { "FAIL" },
            self.successes,
            self.trials,
            self.success_rate * 100.0,
            self.bar * 100.0
        )
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial as u64)))
}

/// Runs `f` for trials `0..trials` in parallel; results come back in trial order.
pub(crate) fn run_trials<T, F>(seed: u64, trials: usize, f: F) -> (Vec<T>, u64)
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let t0 = Instant::now();
    let out = (0..trials)
        .into_par_iter()
        .map(|i| f(i, &mut trial_rng(seed, i)))
        .collect();
    (out, t0.elapsed().as_millis() as u64)
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

pub(crate) fn unit_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v = gaussian_vec(rng, dim);
        if let Ok(u) = crate::vector::normalized(&v) {
            return u;
        }
    }
}

/// Random unit vector orthogonal to every vector in `basis` (assumed orthonormal).
pub(crate) fn orthogonal_unit(rng: &mut ChaCha8Rng, basis: &[&[f32]]) -> Vec<f32> {
    loop {
        let mut v = gaussian_vec(rng, basis[0].len());
        for b in basis {
            let d = crate::vector::dot(&v, b);
            v.iter_mut().zip(b.iter()).for_each(|(x, y)| *x -= d * y);
        }
        if let Ok(u) = crate::vector::normalized(&v) {
            return u;
        }
    }
}

/// `cos θ · a + sin θ · b` for orthonormal `a`, `b`: a unit vector at cosine `c` from `a`.
pub(crate) fn at_cosine(a: &[f32], b: &[f32], c: f32) -> Vec<f32> {
    let s = (1.0 - c * c).max(0.0).sqrt();
    a.iter().zip(b).map(|(x, y)| c * x + s * y).collect()
}

/// JSON for a report field. f32 values keep their shortest decimal form
/// instead of being widened (0.85, not 0.8500000238418579).
pub(crate) fn report_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    let text = serde_json::to_string(v).expect("report fields serialize");
    serde_json::from_str(&text).expect("serialized JSON parses")
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
