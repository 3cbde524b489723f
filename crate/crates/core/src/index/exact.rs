use rayon::prelude::*;

use super::{rank_order, ScoredRow};
use crate::vector::dot;

/// Rows at or above this count are scored in parallel.
const PARALLEL_ROWS: usize = 16_384;

/// Brute-force scan over a contiguous row-major matrix of unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactIndex {
    dim: usize,
    vectors: Vec<f32>,
}

impl ExactIndex {
    pub fn new(dim: usize, vectors: Vec<f32>) -> Self {
        debug_assert!(dim > 0 && vectors.len().is_multiple_of(dim));
        Self { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn search(&self, query: &[f32], m: usize) -> Vec<ScoredRow> {
        let score = |(row, v): (usize, &[f32])| ScoredRow { row: row as u32, score: dot(query, v) };
        let mut all: Vec<ScoredRow> = if self.len() >= PARALLEL_ROWS {
            self.vectors.par_chunks_exact(self.dim).enumerate().map(score).collect()
        } else {
            self.vectors.chunks_exact(self.dim).enumerate().map(score).collect()
        };
        if m < all.len() {
            all.select_nth_unstable_by(m, rank_order);
            all.truncate(m);
        }
        all.sort_by(rank_order);
        all
    }
}
