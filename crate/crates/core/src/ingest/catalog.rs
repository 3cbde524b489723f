use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{KeyframeRecord, ShotBoundary};
use crate::error::{Error, Result};
use crate::store::{
    read_blob_exact, sequence_rows, write_f32le_file, CorpusManifest, KeyframeEntry, SequenceBlob, SequenceManifest,
    VideoManifest, DTYPE_F32LE,
};

/// Result of ingesting one video: its retained keyframes and their raw embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoCatalog {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u64,
    pub dim: usize,
    pub shots: Vec<ShotBoundary>,
    pub keyframes: Vec<KeyframeRecord>,
    /// Row `i` belongs to `keyframes[i]`; values are stored as ingested (not normalized).
    pub embeddings: Vec<f32>,
    pub sequence: Option<SequenceBlob>,
    pub thumbnail_template: Option<String>,
}

/// Keyframe catalog keyed by video id. Ingesting a video again replaces its entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    videos: BTreeMap<String, VideoCatalog>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> Option<usize> {
        self.videos.values().next().map(|v| v.dim)
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&VideoCatalog> {
        self.videos.get(video_id)
    }

    pub fn videos(&self) -> impl Iterator<Item = &VideoCatalog> {
        self.videos.values()
    }

    pub fn records(&self) -> impl Iterator<Item = &KeyframeRecord> {
        self.videos.values().flat_map(|v| v.keyframes.iter())
    }

    /// Inserts or replaces `video`. Its dimension must match every other video.
    pub fn apply(&mut self, video: VideoCatalog) -> Result<()> {
        if let Some(other) = self.videos.values().find(|v| v.video_id != video.video_id) {
            if other.dim != video.dim {
                return Err(Error::ingest(
                    &video.video_id,
                    "dim",
                    format!("corpus dimension is {}, video has {}", other.dim, video.dim),
                ));
            }
        }
        self.videos.insert(video.video_id.clone(), video);
        Ok(())
    }

    pub fn remove(&mut self, video_id: &str) -> Option<VideoCatalog> {
        self.videos.remove(video_id)
    }

    /// Writes `corpus.json` plus one keyframe blob (and optional sequence blob)
    /// per video into `out_dir`. Returns the manifest path.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(out_dir).map_err(Error::io("creating output dir", out_dir))?;
        let mut used = BTreeMap::new();
        let mut manifest = CorpusManifest::default();
        for v in self.videos.values() {
            let stem = file_stem(&v.video_id);
            if let Some(prev) = used.insert(stem.clone(), v.video_id.clone()) {
                return Err(Error::ingest(
                    &v.video_id,
                    "video_id",
                    format!("file name collides with video `{prev}`"),
                ));
            }
            let emb_file = PathBuf::from(format!("{stem}.kf.f32"));
            write_f32le_file(&out_dir.join(&emb_file), &v.embeddings)?;
            let sequence = match &v.sequence {
                Some(seq) => {
                    let file = PathBuf::from(format!("{stem}.seq.f32"));
                    write_f32le_file(&out_dir.join(&file), &seq.values)?;
                    Some(SequenceManifest { file, stride: seq.stride })
                }
                None => None,
            };
            manifest.videos.push(VideoManifest {
                video_id: v.video_id.clone(),
                fps: v.fps,
                frame_count: v.frame_count,
                duration_s: v.frame_count as f64 / v.fps,
                embedding_file: emb_file,
                dim: v.dim,
                dtype: DTYPE_F32LE.into(),
                keyframes: v
                    .keyframes
                    .iter()
                    .map(|k| KeyframeEntry {
                        frame_index: k.frame_index,
                        shot_id: k.shot_id,
                        phash: Some(k.phash),
                    })
                    .collect(),
                sequence,
                shots: v.shots.iter().map(|s| [s.start, s.end]).collect(),
                thumbnail_template: v.thumbnail_template.clone(),
            });
        }
        let path = out_dir.join("corpus.json");
        manifest.write(&path)?;
        Ok(path)
    }

    /// Reads a catalog previously written by [`Catalog::write`].
    pub fn read(manifest_path: &Path) -> Result<Self> {
        let manifest = CorpusManifest::read(manifest_path)?;
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let mut catalog = Catalog::new();
        for vm in &manifest.videos {
            let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
            let embeddings = read_blob_exact(&at(&vm.embedding_file), vm.keyframes.len(), vm.dim)?;
            let keyframes = vm
                .keyframes
                .iter()
                .enumerate()
                .map(|(row, k)| {
                    Ok(KeyframeRecord {
                        video_id: vm.video_id.clone(),
                        frame_index: k.frame_index,
                        timestamp_s: k.frame_index as f64 / vm.fps,
                        phash: k.phash.ok_or_else(|| {
                            Error::Load(format!("video `{}` keyframe row {row} has no phash", vm.video_id))
                        })?,
                        embedding_id: row,
                        shot_id: k.shot_id,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let sequence = match &vm.sequence {
                Some(s) => Some(SequenceBlob {
                    stride: s.stride,
                    values: read_blob_exact(&at(&s.file), sequence_rows(vm.frame_count, s.stride.max(1)), vm.dim)?,
                }),
                None => None,
            };
            catalog.apply(VideoCatalog {
                video_id: vm.video_id.clone(),
                fps: vm.fps,
                frame_count: vm.frame_count,
                dim: vm.dim,
                shots: vm.shots.iter().map(|&[start, end]| ShotBoundary { start, end }).collect(),
                keyframes,
                embeddings,
                sequence,
                thumbnail_template: vm.thumbnail_template.clone(),
            })?;
        }
        Ok(catalog)
    }
}

fn file_stem(video_id: &str) -> String {
    video_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
