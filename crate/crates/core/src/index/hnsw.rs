//! Layered proximity graph (HNSW-style) over unit vectors, scored by inner product.
//!
//! Upper layers hold an exponentially thinning subset of nodes and route the
//! query to a good entry point; layer 0 holds every node with twice the
//! out-degree of the upper layers. Neighbor lists are chosen with the
//! diversity heuristic: a candidate is linked only if it is closer to the base
//! node than to any neighbor already kept.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rank_order, ScoredRow};
use crate::vector::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HnswParams {
    /// Out-degree cap on upper layers; layer 0 allows twice this.
    pub max_degree: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    /// Seeds level assignment so builds are reproducible.
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            max_degree: 16,
            ef_construction: 200,
            ef_search: 400,
            seed: 0x5eed_67ab,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cand {
    score: f32,
    node: u32,
}

impl Eq for Cand {}

impl Ord for Cand {
    // Max-heap by score; lower node id wins ties so exploration order is deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-heap wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Worst(Cand);

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }
}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Visited {
    epoch: u32,
    marks: Vec<u32>,
}

impl Visited {
    fn new(n: usize) -> Self {
        Self { epoch: 0, marks: vec![0; n] }
    }

    fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Returns true the first time `node` is seen in this epoch.
    #[inline]
    fn insert(&mut self, node: u32) -> bool {
        let slot = &mut self.marks[node as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HnswIndex {
    dim: usize,
    params: HnswParams,
    vectors: Vec<f32>,
    /// `links[node][layer]` for layers `0..=level(node)`.
    links: Vec<Vec<Vec<u32>>>,
    entry: u32,
    max_level: usize,
}

impl HnswIndex {
    pub fn build(dim: usize, vectors: Vec<f32>, params: HnswParams) -> Self {
        let n = vectors.len() / dim;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let level_mult = 1.0 / (params.max_degree.max(2) as f64).ln();
        let levels: Vec<usize> = (0..n)
            .map(|_| {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                ((-u.ln() * level_mult).floor() as usize).min(16)
            })
            .collect();

        let mut index = HnswIndex {
            dim,
            params,
            vectors,
            links: levels.iter().map(|&l| vec![Vec::new(); l + 1]).collect(),
            entry: 0,
            max_level: levels.first().copied().unwrap_or(0),
        };
        let mut visited = Visited::new(n);
        for (node, &level) in levels.iter().enumerate().skip(1) {
            index.insert(node as u32, level, &mut visited);
        }
        index
    }

    /// Reassembles an index from persisted parts. Caller validates shapes.
    pub(crate) fn from_parts(
        dim: usize,
        params: HnswParams,
        vectors: Vec<f32>,
        links: Vec<Vec<Vec<u32>>>,
        entry: u32,
        max_level: usize,
    ) -> Self {
        Self { dim, params, vectors, links, entry, max_level }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub(crate) fn links(&self) -> &[Vec<Vec<u32>>] {
        &self.links
    }

    pub(crate) fn entry(&self) -> u32 {
        self.entry
    }

    pub(crate) fn max_level(&self) -> usize {
        self.max_level
    }

    #[inline]
    fn vec(&self, node: u32) -> &[f32] {
        let i = node as usize * self.dim;
        &self.vectors[i..i + self.dim]
    }

    fn cap(&self, layer: usize) -> usize {
        if layer == 0 {
            self.params.max_degree * 2
        } else {
            self.params.max_degree
        }
    }

    fn insert(&mut self, node: u32, level: usize, visited: &mut Visited) {
        let q = self.vec(node).to_vec();
        let mut ep = Cand { score: dot(&q, self.vec(self.entry)), node: self.entry };
        for layer in (level + 1..=self.max_level).rev() {
            ep = self.greedy(&q, ep, layer);
        }
        let mut eps = vec![ep];
        for layer in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(&q, &eps, self.params.ef_construction, layer, visited);
            let chosen = self.select_neighbors(&found, self.params.max_degree);
            self.links[node as usize][layer] = chosen.iter().map(|c| c.node).collect();
            for c in &chosen {
                self.link_back(c.node, node, layer);
            }
            eps = found;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry = node;
        }
    }

    fn link_back(&mut self, from: u32, to: u32, layer: usize) {
        let cap = self.cap(layer);
        let list = &mut self.links[from as usize][layer];
        if list.contains(&to) {
            return;
        }
        list.push(to);
        if list.len() <= cap {
            return;
        }
        let base = self.vec(from).to_vec();
        let mut cands: Vec<Cand> = self.links[from as usize][layer]
            .iter()
            .map(|&n| Cand { score: dot(&base, self.vec(n)), node: n })
            .collect();
        cands.sort_by(|a, b| b.cmp(a));
        let kept = self.select_neighbors(&cands, cap);
        self.links[from as usize][layer] = kept.iter().map(|c| c.node).collect();
    }

    /// Diversity heuristic over candidates sorted best-first; tops up with the
    /// best rejected candidates so nodes keep `limit` links when possible.
    fn select_neighbors(&self, sorted: &[Cand], limit: usize) -> Vec<Cand> {
        let mut kept: Vec<Cand> = Vec::with_capacity(limit);
        let mut rejected: Vec<Cand> = Vec::new();
        for &c in sorted {
            if kept.len() >= limit {
                break;
            }
            let v = self.vec(c.node);
            if kept.iter().all(|k| dot(v, self.vec(k.node)) < c.score) {
                kept.push(c);
            } else {
                rejected.push(c);
            }
        }
        for c in rejected {
            if kept.len() >= limit {
                break;
            }
            kept.push(c);
        }
        kept
    }

    fn greedy(&self, q: &[f32], mut best: Cand, layer: usize) -> Cand {
        loop {
            let mut moved = false;
            for &n in &self.links[best.node as usize][layer] {
                let s = dot(q, self.vec(n));
                let c = Cand { score: s, node: n };
                if c > best {
                    best = c;
                    moved = true;
                }
            }
            if !moved {
                return best;
            }
        }
    }

    /// Beam search on one layer; returns up to `ef` nodes sorted best-first.
    fn search_layer(&self, q: &[f32], entry: &[Cand], ef: usize, layer: usize, visited: &mut Visited) -> Vec<Cand> {
        visited.reset();
        let mut frontier: BinaryHeap<Cand> = BinaryHeap::new();
        let mut best: BinaryHeap<Worst> = BinaryHeap::new();
        for &e in entry {
            if visited.insert(e.node) {
                frontier.push(e);
                best.push(Worst(e));
                if best.len() > ef {
                    best.pop();
                }
            }
        }
        while let Some(c) = frontier.pop() {
            let worst = best.peek().map(|w| w.0.score).unwrap_or(f32::NEG_INFINITY);
            if c.score < worst && best.len() >= ef {
                break;
            }
            for &n in &self.links[c.node as usize][layer] {
                if !visited.insert(n) {
                    continue;
                }
                let s = dot(q, self.vec(n));
                let worst = best.peek().map(|w| w.0.score).unwrap_or(f32::NEG_INFINITY);
                if best.len() < ef || s > worst {
                    let cand = Cand { score: s, node: n };
                    frontier.push(cand);
                    best.push(Worst(cand));
                    if best.len() > ef {
                        best.pop();
                    }
                }
            }
        }
        let mut out: Vec<Cand> = best.into_iter().map(|w| w.0).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    pub fn search(&self, query: &[f32], m: usize) -> Vec<ScoredRow> {
        self.search_with_ef(query, m, self.params.ef_search)
    }

    pub fn search_with_ef(&self, query: &[f32], m: usize, ef: usize) -> Vec<ScoredRow> {
        if self.is_empty() || m == 0 {
            return Vec::new();
        }
        let mut ep = Cand { score: dot(query, self.vec(self.entry)), node: self.entry };
        for layer in (1..=self.max_level).rev() {
            ep = self.greedy(query, ep, layer);
        }
        let mut visited = Visited::new(self.len());
        let found = self.search_layer(query, &[ep], ef.max(m), 0, &mut visited);
        let mut rows: Vec<ScoredRow> = found
            .into_iter()
            .map(|c| ScoredRow { row: c.node, score: c.score })
            .collect();
        rows.sort_by(rank_order);
        rows.truncate(m);
        rows
    }
}
