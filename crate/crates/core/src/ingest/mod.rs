//! Shot-driven keyframe selection, perceptual-hash deduplication and catalog building.
//!
//! A video enters as a shot list (or a uniform segmentation when none is
//! supplied), a source of per-frame perceptual hashes, and an embedding blob.
//! Four candidate keyframes are picked per shot, near-duplicates inside each
//! shot are collapsed, and the surviving frames become [`KeyframeRecord`]s.

mod catalog;
mod dedup;
mod phash;

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use catalog::{Catalog, VideoCatalog};
pub use dedup::{deduplicate_shot, greedy_representatives, is_near_duplicate, DedupConfig};
pub use phash::{compute_phash, compute_phash_raw, hamming_distance, phash_file, PerceptualHash, HASH_BITS};

use crate::error::{Error, Result};
use crate::store::{read_f32le_file, SequenceBlob};

/// Default length (frames) of the uniform segmentation used when no shot list is supplied.
pub const DEFAULT_FALLBACK_SHOT_LEN: u64 = 120;

/// Inclusive frame range `[start, end]` of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotBoundary {
    pub start: u64,
    pub end: u64,
}

impl ShotBoundary {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if start > end {
            return Err(Error::Input(format!("shot [{start}, {end}] has start > end")));
        }
        Ok(Self { start, end })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeRecord {
    pub video_id: String,
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub phash: PerceptualHash,
    /// Row of this keyframe in the video's embedding blob.
    pub embedding_id: usize,
    pub shot_id: usize,
}

/// Candidate keyframes of a shot: `a + ⌊i·(b−a)/3⌋` for i in 0..4, ascending, duplicates collapsed.
pub fn select_keyframe_indices(shot: ShotBoundary) -> Vec<u64> {
    let span = shot.end - shot.start;
    let mut out: Vec<u64> = (0..4u64).map(|i| shot.start + i * span / 3).collect();
    out.dedup();
    out
}

/// Splits `[0, frame_count)` into consecutive shots of `shot_len` frames (last one may be shorter).
pub fn uniform_shots(frame_count: u64, shot_len: u64) -> Vec<ShotBoundary> {
    let shot_len = shot_len.max(1);
    (0..frame_count)
        .step_by(shot_len as usize)
        .map(|start| ShotBoundary {
            start,
            end: (start + shot_len - 1).min(frame_count - 1),
        })
        .collect()
}

/// Shots must be sorted, non-overlapping and inside `[0, frame_count)`.
pub fn validate_shots(video_id: &str, shots: &[ShotBoundary], frame_count: u64) -> Result<()> {
    for (i, s) in shots.iter().enumerate() {
        if s.start > s.end {
            return Err(Error::ingest(video_id, "shots", format!("shot {i} has a > b ({} > {})", s.start, s.end)));
        }
        if s.end >= frame_count {
            return Err(Error::ingest(
                video_id,
                "shots",
                format!("shot {i} ends at frame {} but the video has {frame_count} frames", s.end),
            ));
        }
    }
    for (i, w) in shots.windows(2).enumerate() {
        if w[1].start <= w[0].end {
            return Err(Error::ingest(
                video_id,
                "shots",
                format!("shots {i} and {} overlap or are unsorted", i + 1),
            ));
        }
    }
    Ok(())
}

/// External shot-detector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotFile {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u64,
    pub shots: Vec<[u64; 2]>,
}

impl ShotFile {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(Error::io("reading shot file", path))?;
        serde_json::from_slice(&bytes).map_err(Error::json("parsing shot file", path))
    }

    pub fn boundaries(&self) -> Vec<ShotBoundary> {
        self.shots.iter().map(|&[start, end]| ShotBoundary { start, end }).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HashLine {
    pub frame_index: u64,
    pub phash_hex: String,
}

/// Reads a JSONL file of `{"frame_index", "phash_hex"}` lines. Blank lines are skipped.
pub fn read_hash_file(path: &Path) -> Result<BTreeMap<u64, PerceptualHash>> {
    let file = std::fs::File::open(path).map_err(Error::io("opening hash file", path))?;
    let mut out = BTreeMap::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::io("reading hash file", path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: HashLine = serde_json::from_str(&line).map_err(|source| Error::Json {
            context: format!("{}:{}", path.display(), lineno + 1),
            source,
        })?;
        out.insert(rec.frame_index, PerceptualHash::from_hex(&rec.phash_hex)?);
    }
    Ok(out)
}

/// Where per-frame hashes come from.
#[derive(Debug, Clone)]
pub enum HashSource {
    Precomputed(BTreeMap<u64, PerceptualHash>),
    /// Directory of decoded frames named `{frame_index:06}.png` (or `.jpg`).
    FramesDir(PathBuf),
}

impl HashSource {
    fn hash_for(&self, video_id: &str, frame: u64) -> Result<PerceptualHash> {
        match self {
            HashSource::Precomputed(map) => map.get(&frame).copied().ok_or_else(|| {
                Error::ingest(video_id, "hashes", format!("no perceptual hash for frame {frame}"))
            }),
            HashSource::FramesDir(dir) => {
                let path = ["png", "jpg", "jpeg"]
                    .iter()
                    .map(|ext| dir.join(format!("{frame:06}.{ext}")))
                    .find(|p| p.exists())
                    .ok_or_else(|| {
                        Error::ingest(video_id, "frames_dir", format!("no image for frame {frame} in {}", dir.display()))
                    })?;
                phash_file(&path).map_err(|e| Error::ingest(video_id, "frames_dir", e.to_string()))
            }
        }
    }
}

/// Keyframe embeddings supplied for one video.
#[derive(Debug, Clone)]
pub struct EmbeddingInput {
    pub dim: usize,
    /// Row-major, `rows × dim`.
    pub values: Vec<f32>,
    /// Frame index of each row. `None` means one row per candidate keyframe,
    /// in shot order.
    pub frames: Option<Vec<u64>>,
}

impl EmbeddingInput {
    fn rows(&self) -> usize {
        self.values.len().checked_div(self.dim).unwrap_or(0)
    }
}

/// Everything needed to ingest one video.
#[derive(Debug, Clone)]
pub struct VideoIngest {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u64,
    pub shots: Option<Vec<ShotBoundary>>,
    pub hashes: HashSource,
    pub embeddings: EmbeddingInput,
    pub sequence: Option<SequenceBlob>,
    pub thumbnail_template: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub dedup: DedupConfig,
    pub fallback_shot_len: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            dedup: DedupConfig::default(),
            fallback_shot_len: DEFAULT_FALLBACK_SHOT_LEN,
        }
    }
}

/// Runs keyframe selection and per-shot dedup for one video and gathers the
/// embeddings of the retained frames. `corpus_dim`, when known, must match.
pub fn ingest_video(input: &VideoIngest, corpus_dim: Option<usize>, opts: &IngestOptions) -> Result<VideoCatalog> {
    let id = input.video_id.as_str();
    if id.is_empty() {
        return Err(Error::ingest(id, "video_id", "empty video id"));
    }
    if !(input.fps.is_finite() && input.fps > 0.0) {
        return Err(Error::ingest(id, "fps", format!("fps must be positive, got {}", input.fps)));
    }
    if input.frame_count == 0 {
        return Err(Error::ingest(id, "frame_count", "frame_count must be at least 1"));
    }
    opts.dedup.validate()?;

    let emb = &input.embeddings;
    if emb.dim == 0 {
        return Err(Error::ingest(id, "dim", "embedding dimension must be positive"));
    }
    if let Some(d) = corpus_dim {
        if d != emb.dim {
            return Err(Error::ingest(id, "dim", format!("corpus dimension is {d}, video has {}", emb.dim)));
        }
    }
    if emb.values.is_empty() {
        return Err(Error::ingest(id, "embedding_file", "embedding blob is missing or empty"));
    }
    if !emb.values.len().is_multiple_of(emb.dim) {
        return Err(Error::ingest(
            id,
            "embedding_file",
            format!("{} floats is not a multiple of dim {}", emb.values.len(), emb.dim),
        ));
    }

    let shots = match &input.shots {
        Some(s) => {
            validate_shots(id, s, input.frame_count)?;
            s.clone()
        }
        None => uniform_shots(input.frame_count, opts.fallback_shot_len),
    };

    let candidates: Vec<Vec<u64>> = shots.iter().map(|&s| select_keyframe_indices(s)).collect();

    let row_of: HashMap<u64, usize> = match &emb.frames {
        Some(frames) => {
            if frames.len() != emb.rows() {
                return Err(Error::ingest(
                    id,
                    "embedding_frames",
                    format!("{} frame ids for {} embedding rows", frames.len(), emb.rows()),
                ));
            }
            let mut map = HashMap::with_capacity(frames.len());
            for (row, &f) in frames.iter().enumerate() {
                if map.insert(f, row).is_some() {
                    return Err(Error::ingest(id, "embedding_frames", format!("frame {f} listed twice")));
                }
            }
            map
        }
        None => {
            let total: usize = candidates.iter().map(Vec::len).sum();
            if total != emb.rows() {
                return Err(Error::ingest(
                    id,
                    "embedding_file",
                    format!("expected {total} rows (one per candidate keyframe), found {}", emb.rows()),
                ));
            }
            candidates.iter().flatten().enumerate().map(|(row, &f)| (f, row)).collect()
        }
    };

    let mut keyframes = Vec::new();
    let mut values = Vec::new();
    for (shot_id, frames) in candidates.iter().enumerate() {
        let records = frames
            .iter()
            .map(|&f| {
                Ok(KeyframeRecord {
                    video_id: id.to_string(),
                    frame_index: f,
                    timestamp_s: f as f64 / input.fps,
                    phash: input.hashes.hash_for(id, f)?,
                    embedding_id: 0,
                    shot_id,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for mut rec in deduplicate_shot(&records, &opts.dedup) {
            let src = *row_of.get(&rec.frame_index).ok_or_else(|| {
                Error::ingest(id, "embedding_frames", format!("no embedding row for keyframe {}", rec.frame_index))
            })?;
            rec.embedding_id = keyframes.len();
            values.extend_from_slice(&emb.values[src * emb.dim..(src + 1) * emb.dim]);
            keyframes.push(rec);
        }
    }

    if let Some(seq) = &input.sequence {
        seq.validate(id, input.frame_count, emb.dim)?;
    }

    Ok(VideoCatalog {
        video_id: id.to_string(),
        fps: input.fps,
        frame_count: input.frame_count,
        dim: emb.dim,
        shots,
        keyframes,
        embeddings: values,
        sequence: input.sequence.clone(),
        thumbnail_template: input.thumbnail_template.clone(),
    })
}

/// One video entry of an ingest manifest. Paths are relative to the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestVideoSpec {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hashes_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_dir: Option<PathBuf>,
    pub embedding_file: PathBuf,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_frames: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_stride: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_template: Option<String>,
}

/// Input of `grab ingest`: where to write the corpus and which videos to add.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestManifest {
    pub output_dir: PathBuf,
    pub videos: Vec<IngestVideoSpec>,
}

impl IngestManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(Error::io("reading ingest manifest", path))?;
        serde_json::from_slice(&bytes).map_err(Error::json("parsing ingest manifest", path))
    }
}

impl IngestVideoSpec {
    /// Loads the files this entry points at. `base` is the manifest's directory.
    pub fn resolve(&self, base: &Path) -> Result<VideoIngest> {
        let id = self.video_id.as_str();
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let shots = match &self.shots_file {
            Some(p) => {
                let file = ShotFile::read(&at(p)).map_err(|e| Error::ingest(id, "shots_file", e.to_string()))?;
                if file.video_id != self.video_id {
                    return Err(Error::ingest(id, "shots_file", format!("shot file is for video `{}`", file.video_id)));
                }
                if file.frame_count != self.frame_count {
                    return Err(Error::ingest(
                        id,
                        "shots_file",
                        format!("shot file frame_count {} disagrees with manifest {}", file.frame_count, self.frame_count),
                    ));
                }
                Some(file.boundaries())
            }
            None => None,
        };

        let hashes = match (&self.hashes_file, &self.frames_dir) {
            (Some(p), _) => HashSource::Precomputed(
                read_hash_file(&at(p)).map_err(|e| Error::ingest(id, "hashes_file", e.to_string()))?,
            ),
            (None, Some(dir)) => HashSource::FramesDir(at(dir)),
            (None, None) => {
                return Err(Error::ingest(id, "hashes_file", "neither hashes_file nor frames_dir given"))
            }
        };

        let values = read_f32le_file(&at(&self.embedding_file))
            .map_err(|e| Error::ingest(id, "embedding_file", e.to_string()))?;

        let sequence = match (&self.sequence_file, self.sequence_stride) {
            (Some(p), Some(stride)) => Some(SequenceBlob {
                stride,
                values: read_f32le_file(&at(p)).map_err(|e| Error::ingest(id, "sequence_file", e.to_string()))?,
            }),
            (Some(_), None) => return Err(Error::ingest(id, "sequence_stride", "sequence_file given without a stride")),
            (None, _) => None,
        };

        Ok(VideoIngest {
            video_id: self.video_id.clone(),
            fps: self.fps,
            frame_count: self.frame_count,
            shots,
            hashes,
            embeddings: EmbeddingInput {
                dim: self.dim,
                values,
                frames: self.embedding_frames.clone(),
            },
            sequence,
            thumbnail_template: self.thumbnail_template.clone(),
        })
    }
}

/// Per-video outcome of [`ingest_manifest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedVideo {
    pub video_id: String,
    pub shots: usize,
    pub candidates: usize,
    pub retained: usize,
    /// True when an earlier ingest of the same video was replaced.
    pub replaced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub corpus_manifest: PathBuf,
    pub videos: Vec<IngestedVideo>,
    pub total_videos: usize,
    pub total_keyframes: usize,
}

/// Ingests every video of the manifest at `path` into `output_dir`, merging
/// with the corpus already there. Nothing is written unless every video succeeds.
pub fn ingest_manifest(path: &Path, opts: &IngestOptions) -> Result<IngestSummary> {
    let manifest = IngestManifest::read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let out_dir = if manifest.output_dir.is_absolute() {
        manifest.output_dir.clone()
    } else {
        base.join(&manifest.output_dir)
    };
    let existing = out_dir.join("corpus.json");
    let mut catalog = if existing.exists() { Catalog::read(&existing)? } else { Catalog::new() };

    let mut seen = std::collections::HashSet::new();
    let mut videos = Vec::with_capacity(manifest.videos.len());
    for spec in &manifest.videos {
        if !seen.insert(spec.video_id.as_str()) {
            return Err(Error::ingest(&spec.video_id, "video_id", "listed twice in the manifest"));
        }
        let input = spec.resolve(base)?;
        let replaced = catalog.get(&spec.video_id).is_some();
        let corpus_dim = catalog.videos().find(|v| v.video_id != spec.video_id).map(|v| v.dim);
        let video = ingest_video(&input, corpus_dim, opts)?;
        videos.push(IngestedVideo {
            video_id: video.video_id.clone(),
            shots: video.shots.len(),
            candidates: video.shots.iter().map(|&s| select_keyframe_indices(s).len()).sum(),
            retained: video.keyframes.len(),
            replaced,
        });
        catalog.apply(video)?;
    }
    let corpus_manifest = catalog.write(&out_dir)?;
    Ok(IngestSummary {
        corpus_manifest,
        videos,
        total_videos: catalog.len(),
        total_keyframes: catalog.records().count(),
    })
}
