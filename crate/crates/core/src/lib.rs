//! Video-corpus moment retrieval engine.
//!
//! Pipeline: shot-based keyframe selection and perceptual-hash dedup
//! ([`ingest`]), a normalized embedding [`store`], top-M cosine search
//! ([`index`]), global-descriptor reranking ([`rerank`]), and bidirectional
//! temporal localization around a user-chosen pivot ([`temporal`]).
//! [`eval`] holds the seeded synthetic scenarios used to check each stage.

pub mod error;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod rerank;
pub mod store;
pub mod temporal;
pub mod vector;

pub use error::{Error, Result};
