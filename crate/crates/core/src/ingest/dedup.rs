use serde::{Deserialize, Serialize};

use super::phash::{hamming_distance, PerceptualHash, HASH_BITS};
use super::KeyframeRecord;
use crate::error::{Error, Result};

/// Near-duplicate threshold configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    /// Similarity threshold τ in (0, 1].
    pub tau: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self { tau: 0.8 }
    }
}

impl DedupConfig {
    pub fn new(tau: f64) -> Result<Self> {
        let cfg = Self { tau };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Input(format!("tau must be in (0, 1], got {}", self.tau)));
        }
        Ok(())
    }

    /// Largest Hamming distance still counted as a near-duplicate:
    /// `floor(N − N·τ)`, with a 1e-9 guard so thresholds that are integral in
    /// exact arithmetic (τ = 0.75 → 16) do not lose a unit to rounding.
    /// N = 64, τ = 0.8 gives 12 (the bound is 12.8).
    pub fn max_distance(&self) -> u32 {
        let n = HASH_BITS as f64;
        let bound = n - n * self.tau;
        (bound + 1e-9).floor().max(0.0) as u32
    }
}

/// `D(h1, h2) ≤ N·(1 − τ)`.
pub fn is_near_duplicate(a: PerceptualHash, b: PerceptualHash, cfg: &DedupConfig) -> bool {
    hamming_distance(a, b) <= cfg.max_distance()
}

/// Greedy temporal clustering over hashes given in frame order. A hash joins the
/// open cluster iff it is a near-duplicate of that cluster's first member;
/// otherwise it opens a new cluster. Returns the indices of the cluster
/// representatives (each cluster's earliest member), ascending.
pub fn greedy_representatives(hashes: &[PerceptualHash], cfg: &DedupConfig) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    for (i, &h) in hashes.iter().enumerate() {
        match reps.last() {
            Some(&r) if is_near_duplicate(hashes[r], h, cfg) => {}
            _ => reps.push(i),
        }
    }
    reps
}

/// Drops near-duplicate keyframes within one shot. Input must be sorted by frame index.
pub fn deduplicate_shot(keyframes: &[KeyframeRecord], cfg: &DedupConfig) -> Vec<KeyframeRecord> {
    let hashes: Vec<PerceptualHash> = keyframes.iter().map(|k| k.phash).collect();
    greedy_representatives(&hashes, cfg)
        .into_iter()
        .map(|i| keyframes[i].clone())
        .collect()
}
