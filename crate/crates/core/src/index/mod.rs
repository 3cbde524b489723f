//! Top-M cosine retrieval over the keyframe rows of a [`Store`].
//!
//! Two modes share one contract: [`IndexMode::Exact`] scans every row and is
//! the correctness reference; [`IndexMode::Approximate`] walks a layered
//! proximity graph. Both order hits by score descending, then by row id
//! (which the store assigns in `(video_id, frame_index)` order).

mod exact;
mod hnsw;
mod persist;

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use exact::ExactIndex;
pub use hnsw::{HnswIndex, HnswParams};
pub use persist::{INDEX_MAGIC, INDEX_VERSION};

use crate::error::{Error, Result};
use crate::store::Store;
use crate::vector::normalized;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    Exact,
    #[serde(alias = "approx")]
    Approximate,
}

/// Stores smaller than this default to exact search.
pub const EXACT_DEFAULT_MAX_ROWS: usize = 1_000_000;

impl IndexMode {
    pub fn default_for(rows: usize) -> Self {
        if rows < EXACT_DEFAULT_MAX_ROWS {
            IndexMode::Exact
        } else {
            IndexMode::Approximate
        }
    }
}

impl std::str::FromStr for IndexMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(IndexMode::Exact),
            "approx" | "approximate" => Ok(IndexMode::Approximate),
            other => Err(Error::Input(format!("unknown index mode `{other}` (exact|approx)"))),
        }
    }
}

/// A row and its similarity to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredRow {
    pub row: u32,
    pub score: f32,
}

/// Score descending, then row ascending.
pub(crate) fn rank_order(a: &ScoredRow, b: &ScoredRow) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.row.cmp(&b.row))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub video_id: String,
    pub frame_index: u64,
    pub row: usize,
    pub score: f32,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Index {
    Exact(ExactIndex),
    Approximate(HnswIndex),
}

impl Index {
    pub fn mode(&self) -> IndexMode {
        match self {
            Index::Exact(_) => IndexMode::Exact,
            Index::Approximate(_) => IndexMode::Approximate,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Index::Exact(i) => i.len(),
            Index::Approximate(i) => i.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Index::Exact(i) => i.dim(),
            Index::Approximate(i) => i.dim(),
        }
    }

    pub(crate) fn vectors(&self) -> &[f32] {
        match self {
            Index::Exact(i) => i.vectors(),
            Index::Approximate(i) => i.vectors(),
        }
    }

    /// Top-`m` rows for an already-normalized query.
    pub fn search_rows(&self, query: &[f32], m: usize) -> Vec<ScoredRow> {
        match self {
            Index::Exact(i) => i.search(query, m),
            Index::Approximate(i) => i.search(query, m),
        }
    }

    /// Checks that this index was built over exactly the rows of `store`.
    pub fn check_matches(&self, store: &Store) -> Result<()> {
        if self.dim() != store.dim() || self.len() != store.len() {
            return Err(Error::Index(format!(
                "index has {} rows × {} dims, store has {} × {}",
                self.len(),
                self.dim(),
                store.len(),
                store.dim()
            )));
        }
        if self.vectors() != store.matrix() {
            return Err(Error::Index("index vectors differ from the loaded corpus; rebuild the index".into()));
        }
        Ok(())
    }
}

/// Where `grab build-index` writes, and the service looks, by default:
/// the corpus manifest path with a `.grabidx` extension.
pub fn default_index_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("grabidx")
}

pub fn build_index(store: &Store, mode: IndexMode) -> Result<Index> {
    build_index_with(store, mode, HnswParams::default())
}

pub fn build_index_with(store: &Store, mode: IndexMode, params: HnswParams) -> Result<Index> {
    if store.is_empty() {
        return Err(Error::Index("cannot build an index over an empty store".into()));
    }
    let vectors = store.matrix().to_vec();
    Ok(match mode {
        IndexMode::Exact => Index::Exact(ExactIndex::new(store.dim(), vectors)),
        IndexMode::Approximate => Index::Approximate(HnswIndex::build(store.dim(), vectors, params)),
    })
}

/// Top-`m` keyframes by cosine similarity. The query is normalized here, so any
/// positive rescaling returns the same list.
pub fn search_top_m(index: &Index, store: &Store, query: &[f32], m: usize) -> Result<Vec<SearchHit>> {
    if query.len() != index.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            actual: query.len(),
        });
    }
    if m == 0 {
        return Err(Error::Input("M must be at least 1".into()));
    }
    let q = normalized(query)?;
    Ok(hits_from_rows(store, &index.search_rows(&q, m)))
}

pub fn hits_from_rows(store: &Store, rows: &[ScoredRow]) -> Vec<SearchHit> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let meta = store.row_meta(r.row as usize);
            SearchHit {
                video_id: store.video(meta.video).video_id.clone(),
                frame_index: meta.frame_index,
                row: r.row as usize,
                score: r.score,
                rank: i + 1,
            }
        })
        .collect()
}
