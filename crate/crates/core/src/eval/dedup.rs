use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{report_json, run_trials, EvalReport};
use crate::error::{Error, Result};
use crate::ingest::{greedy_representatives, hamming_distance, DedupConfig, PerceptualHash};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupScenario {
    pub clusters: usize,
    /// Max bits a member differs from its cluster's first member; intra-cluster
    /// distances are therefore ≤ 2·spread.
    pub spread: u32,
    /// Minimum Hamming distance between members of different clusters.
    pub min_separation: u32,
    pub members: (usize, usize),
}

impl Default for DedupScenario {
    fn default() -> Self {
        Self {
            clusters: 10,
            spread: 6,
            min_separation: 20,
            members: (2, 6),
        }
    }
}

impl DedupScenario {
    /// Rejects configurations that cannot give clean ground truth at `cfg`.
    pub fn validate(&self, cfg: &DedupConfig) -> Result<()> {
        let limit = cfg.max_distance();
        if self.clusters == 0 {
            return Err(Error::Input("at least one cluster is required".into()));
        }
        if 2 * self.spread > limit {
            return Err(Error::Input(format!(
                "spread {} allows intra-cluster distance {} above the duplicate limit {limit}",
                self.spread,
                2 * self.spread
            )));
        }
        if self.min_separation <= limit {
            return Err(Error::Input(format!(
                "separation {} does not exceed the duplicate limit {limit}",
                self.min_separation
            )));
        }
        if self.members.0 == 0 || self.members.0 > self.members.1 {
            return Err(Error::Input("members range must be non-empty and start at 1 or more".into()));
        }
        Ok(())
    }
}

/// Planted hashes in temporal order plus the cluster each one came from.
#[derive(Debug, Clone, PartialEq)]
pub struct HashClusters {
    pub hashes: Vec<PerceptualHash>,
    pub labels: Vec<usize>,
}

fn flip_random_bits(rng: &mut ChaCha8Rng, base: u64, count: u32) -> u64 {
    let mut bits: Vec<u32> = (0..64).collect();
    bits.shuffle(rng);
    bits[..count as usize].iter().fold(base, |h, &b| h ^ (1 << b))
}

/// Generates clusters whose members are within `spread` bits of the cluster's
/// first member, with centers far enough apart that every cross-cluster pair
/// is at least `min_separation` bits apart. Clusters appear contiguously.
pub fn planted_hash_clusters(rng: &mut ChaCha8Rng, sc: &DedupScenario) -> Result<HashClusters> {
    let center_gap = sc.min_separation + 2 * sc.spread;
    let mut centers: Vec<u64> = Vec::with_capacity(sc.clusters);
    let mut attempts = 0;
    while centers.len() < sc.clusters {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Input(format!(
                "could not place {} centers {center_gap} bits apart",
                sc.clusters
            )));
        }
        let c: u64 = rng.random();
        if centers.iter().all(|&o| (c ^ o).count_ones() >= center_gap) {
            centers.push(c);
        }
    }
    let mut hashes = Vec::new();
    let mut labels = Vec::new();
    for (label, &c) in centers.iter().enumerate() {
        let n = rng.random_range(sc.members.0..=sc.members.1);
        hashes.push(PerceptualHash(c));
        labels.push(label);
        for _ in 1..n {
            let flips = rng.random_range(0..=sc.spread);
            hashes.push(PerceptualHash(flip_random_bits(rng, c, flips)));
            labels.push(label);
        }
    }
    // ground-truth check on the generated set
    for i in 0..hashes.len() {
        for j in i + 1..hashes.len() {
            let d = hamming_distance(hashes[i], hashes[j]);
            if labels[i] == labels[j] {
                debug_assert!(d <= 2 * sc.spread);
            } else {
                debug_assert!(d >= sc.min_separation);
            }
        }
    }
    Ok(HashClusters { hashes, labels })
}

/// Planted-cluster dedup: a trial succeeds when exactly one representative per
/// cluster survives and no representative absorbed another cluster's frames.
pub fn eval_dedup(seed: u64, trials: usize, sc: &DedupScenario, cfg: &DedupConfig) -> Result<EvalReport> {
    sc.validate(cfg)?;
    let (results, ms) = run_trials(seed, trials, |trial, rng| -> Result<serde_json::Value> {
        let planted = planted_hash_clusters(rng, sc)?;
        let reps = greedy_representatives(&planted.hashes, cfg);
        let rep_labels: Vec<usize> = reps.iter().map(|&r| planted.labels[r]).collect();
        // each frame must be absorbed by the representative of its own cluster
        let mut false_merges = 0;
        let mut current = None;
        for (i, &label) in planted.labels.iter().enumerate() {
            if reps.contains(&i) {
                current = Some(label);
            } else if current != Some(label) {
                false_merges += 1;
            }
        }
        let ok = reps.len() == sc.clusters && rep_labels == (0..sc.clusters).collect::<Vec<_>>() && false_merges == 0;
        Ok(json!({
            "trial": trial,
            "frames": planted.hashes.len(),
            "representatives": reps.len(),
            "false_merges": false_merges,
            "success": ok,
        }))
    });
    let diagnostics = results.into_iter().collect::<Result<Vec<_>>>()?;
    let successes = diagnostics.iter().filter(|d| d["success"] == true).count();
    let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
    Ok(EvalReport {
        scenario: "dedup".into(),
        seed,
        params: json!({ "scenario": report_json(sc), "tau": cfg.tau, "max_distance": cfg.max_distance() }),
        trials,
        successes,
        success_rate: rate,
        tolerance: 0.0,
        tolerance_unit: "representatives off".into(),
        bar: 1.0,
        passed: trials > 0 && successes == trials,
        summary: json!({
            "total_false_merges": diagnostics.iter().map(|d| d["false_merges"].as_u64().unwrap_or(0)).sum::<u64>(),
        }),
        diagnostics,
        wall_clock_ms: ms,
    })
}
