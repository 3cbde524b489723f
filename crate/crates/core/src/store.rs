//! Corpus manifest, raw `f32le` embedding blobs, and the immutable in-memory store.
//!
//! Blobs are headerless little-endian float32, row-major; their shape comes
//! from the manifest. Keyframe rows are sorted by `(video_id, frame_index)` at
//! load, so a row id doubles as the search tie-break key.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PerceptualHash;
use crate::vector::normalize_in_place;

pub const DTYPE_F32LE: &str = "f32le";

/// Slack (in frames) when comparing frame positions against time bounds.
const FRAME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CorpusManifest {
    pub videos: Vec<VideoManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u64,
    pub duration_s: f64,
    pub embedding_file: PathBuf,
    pub dim: usize,
    pub dtype: String,
    /// Row `i` of `embedding_file` is `keyframes[i]`.
    pub keyframes: Vec<KeyframeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceManifest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shots: Vec<[u64; 2]>,
    /// e.g. `thumbs/{video_id}/{frame_index}.jpg`, relative to the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_template: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeEntry {
    pub frame_index: u64,
    #[serde(default)]
    pub shot_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phash: Option<PerceptualHash>,
}

/// Strided per-frame embeddings: row `k` is frame `k·stride`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub file: PathBuf,
    pub stride: u64,
}

impl CorpusManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(Error::io("reading corpus manifest", path))?;
        serde_json::from_slice(&bytes).map_err(Error::json("parsing corpus manifest", path))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(Error::json("serializing corpus manifest", path))?;
        write_atomic(path, &json)
    }
}

/// Sequence embeddings held in memory before they are written or loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBlob {
    pub stride: u64,
    pub values: Vec<f32>,
}

/// Number of strided rows for a video: frames 0, s, 2s, … ≤ frame_count − 1.
pub fn sequence_rows(frame_count: u64, stride: u64) -> usize {
    frame_count.div_ceil(stride) as usize
}

impl SequenceBlob {
    pub fn validate(&self, video_id: &str, frame_count: u64, dim: usize) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::ingest(video_id, "sequence_stride", "stride must be at least 1"));
        }
        let rows = sequence_rows(frame_count, self.stride);
        if self.values.len() != rows * dim {
            return Err(Error::ingest(
                video_id,
                "sequence_file",
                format!(
                    "expected {rows} rows × {dim} dims = {} floats, found {}",
                    rows * dim,
                    self.values.len()
                ),
            ));
        }
        Ok(())
    }
}

pub fn encode_f32le(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f32le(bytes: &[u8]) -> Result<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Load(format!("blob length {} is not a multiple of 4", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_f32le_file(path: &Path) -> Result<Vec<f32>> {
    let bytes = std::fs::read(path).map_err(Error::io("reading embedding blob", path))?;
    decode_f32le(&bytes)
}

pub fn write_f32le_file(path: &Path, values: &[f32]) -> Result<()> {
    write_atomic(path, &encode_f32le(values))
}

/// Reads a blob that must hold exactly `rows × dim` floats.
pub fn read_blob_exact(path: &Path, rows: usize, dim: usize) -> Result<Vec<f32>> {
    let meta = std::fs::metadata(path).map_err(Error::io("opening embedding blob", path))?;
    let expected = (rows * dim * 4) as u64;
    if meta.len() != expected {
        return Err(Error::Load(format!(
            "{}: expected {rows} rows × {dim} dims × 4 = {expected} bytes, found {}",
            path.display(),
            meta.len()
        )));
    }
    read_f32le_file(path)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = std::fs::File::create(&tmp).map_err(Error::io("creating", &tmp))?;
        f.write_all(bytes).map_err(Error::io("writing", &tmp))?;
        f.sync_all().map_err(Error::io("syncing", &tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(Error::io("renaming into place", path))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// One keyframe row of the store.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMeta {
    pub video: usize,
    pub frame_index: u64,
    pub shot_id: usize,
    pub timestamp_s: f64,
    pub phash: Option<PerceptualHash>,
}

#[derive(Debug, Clone)]
pub struct SequenceData {
    pub stride: u64,
    values: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct VideoData {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u64,
    pub duration_s: f64,
    pub thumbnail_template: Option<String>,
    pub sequence: Option<SequenceData>,
}

impl VideoData {
    pub fn timestamp(&self, frame: u64) -> f64 {
        frame as f64 / self.fps
    }

    pub fn last_frame(&self) -> u64 {
        self.frame_count - 1
    }
}

/// A strided frame with its embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqFrame<'a> {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub embedding: &'a [f32],
}

/// Immutable, normalized embedding store.
#[derive(Debug, Clone, Default)]
pub struct Store {
    dim: usize,
    videos: Vec<VideoData>,
    video_lookup: HashMap<String, usize>,
    rows: Vec<RowMeta>,
    matrix: Vec<f32>,
    row_lookup: HashMap<(usize, u64), usize>,
}

impl Store {
    /// Reads the manifest at `path` and loads every blob it references.
    pub fn open(path: &Path) -> Result<Self> {
        let manifest = CorpusManifest::read(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        load_corpus(&manifest, base)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row-major `len() × dim()` matrix of unit vectors.
    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.matrix[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_meta(&self, row: usize) -> &RowMeta {
        &self.rows[row]
    }

    pub fn rows(&self) -> &[RowMeta] {
        &self.rows
    }

    pub fn videos(&self) -> &[VideoData] {
        &self.videos
    }

    pub fn video(&self, idx: usize) -> &VideoData {
        &self.videos[idx]
    }

    pub fn video_index(&self, video_id: &str) -> Option<usize> {
        self.video_lookup.get(video_id).copied()
    }

    pub fn video_by_id(&self, video_id: &str) -> Result<&VideoData> {
        self.video_index(video_id)
            .map(|i| &self.videos[i])
            .ok_or_else(|| Error::NotFound(format!("video `{video_id}`")))
    }

    pub fn row_of(&self, video_id: &str, frame_index: u64) -> Option<usize> {
        let v = self.video_index(video_id)?;
        self.row_lookup.get(&(v, frame_index)).copied()
    }

    pub fn get_keyframe_embedding(&self, video_id: &str, frame_index: u64) -> Result<&[f32]> {
        self.row_of(video_id, frame_index)
            .map(|r| self.row(r))
            .ok_or_else(|| Error::NotFound(format!("keyframe {frame_index} of video `{video_id}`")))
    }

    fn sequence_of(&self, video_id: &str) -> Result<(&VideoData, &SequenceData)> {
        let video = self.video_by_id(video_id)?;
        let seq = video
            .sequence
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("video `{video_id}` has no sequence embeddings")))?;
        Ok((video, seq))
    }

    pub fn has_sequence(&self, video_id: &str) -> bool {
        self.sequence_of(video_id).is_ok()
    }

    /// Strided frames whose timestamps fall in `[t_lo, t_hi]`, clamped to the video.
    /// Empty when no strided frame lies in the range.
    pub fn frames_in_time_range(&self, video_id: &str, t_lo: f64, t_hi: f64) -> Result<Vec<SeqFrame<'_>>> {
        let (video, seq) = self.sequence_of(video_id)?;
        let lo_frame = (t_lo * video.fps).max(0.0);
        let hi_frame = (t_hi * video.fps).min(video.last_frame() as f64);
        if hi_frame + FRAME_EPS < lo_frame {
            return Ok(Vec::new());
        }
        let stride = seq.stride as f64;
        let first = ((lo_frame - FRAME_EPS) / stride).ceil().max(0.0) as u64;
        let last = ((hi_frame + FRAME_EPS) / stride).floor() as u64;
        let rows = sequence_rows(video.frame_count, seq.stride) as u64;
        Ok((first..=last.min(rows.saturating_sub(1)))
            .map(|k| self.seq_frame(video, seq, k))
            .collect())
    }

    fn seq_frame<'a>(&'a self, video: &VideoData, seq: &'a SequenceData, k: u64) -> SeqFrame<'a> {
        let frame = k * seq.stride;
        let start = k as usize * self.dim;
        SeqFrame {
            frame_index: frame,
            timestamp_s: video.timestamp(frame),
            embedding: &seq.values[start..start + self.dim],
        }
    }

    /// The strided frame closest to `frame` (earlier one on ties).
    pub fn nearest_strided_frame(&self, video_id: &str, frame: u64) -> Result<SeqFrame<'_>> {
        let (video, seq) = self.sequence_of(video_id)?;
        let rows = sequence_rows(video.frame_count, seq.stride) as u64;
        let below = (frame / seq.stride).min(rows - 1);
        let above = (below + 1).min(rows - 1);
        let k = if above * seq.stride >= frame && above * seq.stride - frame < frame.abs_diff(below * seq.stride) {
            above
        } else {
            below
        };
        Ok(self.seq_frame(video, seq, k))
    }

    /// Strided frames within `half_span_s` seconds of `center`, ordered by frame.
    /// With no strided frame in range, the single nearest strided frame is returned.
    pub fn get_frame_window(&self, video_id: &str, center: u64, half_span_s: f64) -> Result<Vec<SeqFrame<'_>>> {
        let video = self.video_by_id(video_id)?;
        if center > video.last_frame() {
            return Err(Error::Input(format!(
                "frame {center} outside video `{video_id}` ({} frames)",
                video.frame_count
            )));
        }
        if half_span_s.is_nan() || half_span_s < 0.0 {
            return Err(Error::Input(format!("negative window span {half_span_s}")));
        }
        let t = video.timestamp(center);
        let frames = self.frames_in_time_range(video_id, t - half_span_s, t + half_span_s)?;
        if frames.is_empty() {
            return Ok(vec![self.nearest_strided_frame(video_id, center)?]);
        }
        Ok(frames)
    }
}

/// A video held in memory, as accepted by [`Store::from_videos`].
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryVideo {
    pub video_id: String,
    pub fps: f64,
    pub frame_count: u64,
    pub dim: usize,
    pub keyframes: Vec<KeyframeEntry>,
    /// Row `i` belongs to `keyframes[i]`; need not be normalized.
    pub keyframe_values: Vec<f32>,
    pub sequence: Option<SequenceBlob>,
    pub thumbnail_template: Option<String>,
}

/// Loads and normalizes every blob named by `manifest`; relative paths resolve against `base`.
pub fn load_corpus(manifest: &CorpusManifest, base: &Path) -> Result<Store> {
    let dim = manifest.videos.first().map(|v| v.dim).unwrap_or(0);
    let videos = manifest
        .videos
        .iter()
        .map(|vm| {
            let id = vm.video_id.as_str();
            let fail = |msg: String| Error::Load(format!("video `{id}`: {msg}"));
            if vm.dim != dim {
                return Err(fail(format!("dim {} differs from corpus dim {dim}", vm.dim)));
            }
            if vm.dtype != DTYPE_F32LE {
                return Err(fail(format!("unsupported dtype `{}`, expected `{DTYPE_F32LE}`", vm.dtype)));
            }
            let keyframe_values = read_blob_exact(&resolve(base, &vm.embedding_file), vm.keyframes.len(), dim)
                .map_err(|e| fail(e.to_string()))?;
            let sequence = match &vm.sequence {
                Some(sm) => {
                    if sm.stride == 0 {
                        return Err(fail("sequence stride must be at least 1".into()));
                    }
                    let rows = sequence_rows(vm.frame_count, sm.stride);
                    let values = read_blob_exact(&resolve(base, &sm.file), rows, dim).map_err(|e| fail(e.to_string()))?;
                    Some(SequenceBlob { stride: sm.stride, values })
                }
                None => None,
            };
            Ok(MemoryVideo {
                video_id: vm.video_id.clone(),
                fps: vm.fps,
                frame_count: vm.frame_count,
                dim: vm.dim,
                keyframes: vm.keyframes.clone(),
                keyframe_values,
                sequence,
                thumbnail_template: vm.thumbnail_template.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Store::from_videos(videos)
}

impl Store {
    /// Validates, normalizes and indexes in-memory videos.
    pub fn from_videos(mut videos: Vec<MemoryVideo>) -> Result<Store> {
        videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        let mut store = Store::default();
        let dim = videos.first().map(|v| v.dim).unwrap_or(0);
        store.dim = dim;

        for vm in videos {
            let id = vm.video_id.clone();
            let fail = |msg: String| Error::Load(format!("video `{id}`: {msg}"));
            if store.video_lookup.contains_key(&id) {
                return Err(fail("duplicate video id".into()));
            }
            if vm.dim != dim || dim == 0 {
                return Err(fail(format!("dim {} differs from corpus dim {dim}", vm.dim)));
            }
            if vm.frame_count == 0 {
                return Err(fail("frame_count must be at least 1".into()));
            }
            if !(vm.fps.is_finite() && vm.fps > 0.0) {
                return Err(fail(format!("fps must be positive, got {}", vm.fps)));
            }
            if vm.keyframe_values.len() != vm.keyframes.len() * dim {
                return Err(fail(format!(
                    "{} keyframes need {} floats, found {}",
                    vm.keyframes.len(),
                    vm.keyframes.len() * dim,
                    vm.keyframe_values.len()
                )));
            }
            let mut values = vm.keyframe_values;
            for (r, chunk) in values.chunks_exact_mut(dim).enumerate() {
                normalize_in_place(chunk).map_err(|e| fail(format!("keyframe row {r}: {e}")))?;
            }

            let sequence = match vm.sequence {
                Some(mut seq) => {
                    if seq.stride == 0 {
                        return Err(fail("sequence stride must be at least 1".into()));
                    }
                    let rows = sequence_rows(vm.frame_count, seq.stride);
                    if seq.values.len() != rows * dim {
                        return Err(fail(format!(
                            "sequence needs {rows} rows × {dim} dims, found {} floats",
                            seq.values.len()
                        )));
                    }
                    for (r, chunk) in seq.values.chunks_exact_mut(dim).enumerate() {
                        normalize_in_place(chunk).map_err(|e| fail(format!("sequence row {r}: {e}")))?;
                    }
                    Some(SequenceData { stride: seq.stride, values: seq.values })
                }
                None => None,
            };

            let video_idx = store.videos.len();
            store.video_lookup.insert(id.clone(), video_idx);
            store.videos.push(VideoData {
                video_id: id.clone(),
                fps: vm.fps,
                frame_count: vm.frame_count,
                duration_s: vm.frame_count as f64 / vm.fps,
                thumbnail_template: vm.thumbnail_template,
                sequence,
            });

            let mut kf_order: Vec<usize> = (0..vm.keyframes.len()).collect();
            kf_order.sort_by_key(|&i| vm.keyframes[i].frame_index);
            for i in kf_order {
                let kf = &vm.keyframes[i];
                if kf.frame_index >= vm.frame_count {
                    return Err(fail(format!("keyframe row {i} frame {} is past the last frame", kf.frame_index)));
                }
                let row = store.rows.len();
                if store.row_lookup.insert((video_idx, kf.frame_index), row).is_some() {
                    return Err(fail(format!("keyframe frame {} listed twice", kf.frame_index)));
                }
                store.rows.push(RowMeta {
                    video: video_idx,
                    frame_index: kf.frame_index,
                    shot_id: kf.shot_id,
                    timestamp_s: kf.frame_index as f64 / vm.fps,
                    phash: kf.phash,
                });
                store.matrix.extend_from_slice(&values[i * dim..(i + 1) * dim]);
            }
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::norm;

    fn write_video(dir: &Path, id: &str, dim: usize, kf: &[(u64, Vec<f32>)], seq: Option<(u64, Vec<f32>)>, frames: u64) -> VideoManifest {
        let emb_file = PathBuf::from(format!("{id}.kf.f32"));
        let flat: Vec<f32> = kf.iter().flat_map(|(_, v)| v.clone()).collect();
        write_f32le_file(&dir.join(&emb_file), &flat).unwrap();
        let sequence = seq.map(|(stride, values)| {
            let file = PathBuf::from(format!("{id}.seq.f32"));
            write_f32le_file(&dir.join(&file), &values).unwrap();
            SequenceManifest { file, stride }
        });
        VideoManifest {
            video_id: id.into(),
            fps: 30.0,
            frame_count: frames,
            duration_s: frames as f64 / 30.0,
            embedding_file: emb_file,
            dim,
            dtype: DTYPE_F32LE.into(),
            keyframes: kf
                .iter()
                .map(|(f, _)| KeyframeEntry { frame_index: *f, shot_id: 0, phash: None })
                .collect(),
            sequence,
            shots: vec![],
            thumbnail_template: None,
        }
    }

    #[test]
    fn empty_manifest_is_empty_store() {
        let store = load_corpus(&CorpusManifest::default(), Path::new(".")).unwrap();
        assert!(store.is_empty());
        assert!(store.videos().is_empty());
    }

    #[test]
    fn three_four_five_normalizes() {
        let dir = tempfile::tempdir().unwrap();
        let m = CorpusManifest { videos: vec![write_video(dir.path(), "a", 2, &[(0, vec![3.0, 4.0])], None, 10)] };
        let store = load_corpus(&m, dir.path()).unwrap();
        assert_eq!(store.get_keyframe_embedding("a", 0).unwrap(), &[0.6, 0.8]);
        assert!(matches!(store.get_keyframe_embedding("a", 1), Err(Error::NotFound(_))));
        assert!(matches!(store.get_keyframe_embedding("zz", 0), Err(Error::NotFound(_))));
    }

    #[test]
    fn wrong_blob_size_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut vm = write_video(dir.path(), "a", 2, &[(0, vec![3.0, 4.0])], None, 10);
        vm.keyframes.push(KeyframeEntry { frame_index: 5, shot_id: 0, phash: None });
        let err = load_corpus(&CorpusManifest { videos: vec![vm] }, dir.path()).unwrap_err();
        assert!(err.to_string().contains("bytes"), "{err}");
    }

    #[test]
    fn zero_and_nan_rows_rejected_with_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let vm = write_video(dir.path(), "a", 2, &[(0, vec![1.0, 0.0]), (4, vec![0.0, 0.0])], None, 10);
        let err = load_corpus(&CorpusManifest { videos: vec![vm] }, dir.path()).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");

        let vm = write_video(dir.path(), "b", 2, &[(0, vec![f32::NAN, 0.0])], None, 10);
        assert!(load_corpus(&CorpusManifest { videos: vec![vm] }, dir.path()).is_err());
    }

    #[test]
    fn bad_dtype_and_mixed_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut vm = write_video(dir.path(), "a", 2, &[(0, vec![1.0, 0.0])], None, 10);
        vm.dtype = "f16".into();
        assert!(load_corpus(&CorpusManifest { videos: vec![vm] }, dir.path()).is_err());

        let a = write_video(dir.path(), "a", 2, &[(0, vec![1.0, 0.0])], None, 10);
        let b = write_video(dir.path(), "b", 3, &[(0, vec![1.0, 0.0, 0.0])], None, 10);
        assert!(load_corpus(&CorpusManifest { videos: vec![a, b] }, dir.path()).is_err());
    }

    #[test]
    fn rows_sorted_by_video_then_frame() {
        let dir = tempfile::tempdir().unwrap();
        let b = write_video(dir.path(), "b", 2, &[(9, vec![1.0, 0.0]), (3, vec![0.0, 1.0])], None, 10);
        let a = write_video(dir.path(), "a", 2, &[(7, vec![1.0, 1.0])], None, 10);
        let store = load_corpus(&CorpusManifest { videos: vec![b, a] }, dir.path()).unwrap();
        let keys: Vec<(String, u64)> = store
            .rows()
            .iter()
            .map(|r| (store.video(r.video).video_id.clone(), r.frame_index))
            .collect();
        assert_eq!(keys, vec![("a".into(), 7), ("b".into(), 3), ("b".into(), 9)]);
        assert_eq!(store.get_keyframe_embedding("b", 3).unwrap(), &[0.0, 1.0]);
        for r in 0..store.len() {
            assert!((norm(store.row(r)) - 1.0).abs() < 1e-5);
        }
    }

    fn seq_store(frames: u64, stride: u64) -> (tempfile::TempDir, Store) {
        let dir = tempfile::tempdir().unwrap();
        let rows = sequence_rows(frames, stride);
        let seq: Vec<f32> = (0..rows).flat_map(|k| vec![1.0, k as f32]).collect();
        let vm = write_video(dir.path(), "v", 2, &[(0, vec![1.0, 0.0])], Some((stride, seq)), frames);
        let store = load_corpus(&CorpusManifest { videos: vec![vm] }, dir.path()).unwrap();
        (dir, store)
    }

    #[test]
    fn frame_window_stride_grid_count() {
        let (_d, store) = seq_store(3000, 6);
        let w = store.get_frame_window("v", 900, 10.0).unwrap();
        assert_eq!(w.len(), 101);
        assert_eq!(w.first().unwrap().frame_index, 600);
        assert_eq!(w.last().unwrap().frame_index, 1200);
        assert!(w.windows(2).all(|p| p[1].frame_index == p[0].frame_index + 6));
    }

    #[test]
    fn frame_window_zero_span_and_clamps() {
        let (_d, store) = seq_store(1800, 6);
        let w = store.get_frame_window("v", 602, 0.0).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].frame_index, 600);
        let w = store.get_frame_window("v", 604, 0.0).unwrap();
        assert_eq!(w[0].frame_index, 606);
        let w = store.get_frame_window("v", 600, 0.0).unwrap();
        assert_eq!(w[0].frame_index, 600);

        let w = store.get_frame_window("v", 0, 2.0).unwrap();
        assert_eq!(w.first().unwrap().frame_index, 0);
        assert_eq!(w.last().unwrap().frame_index, 60);

        let w = store.get_frame_window("v", 1799, 2.0).unwrap();
        assert_eq!(w.last().unwrap().frame_index, 1794);
        assert!(w.iter().all(|f| f.frame_index <= 1799));
        assert!(store.get_frame_window("v", 1800, 1.0).is_err());
    }

    #[test]
    fn frame_window_requires_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let vm = write_video(dir.path(), "a", 2, &[(0, vec![1.0, 0.0])], None, 10);
        let store = load_corpus(&CorpusManifest { videos: vec![vm] }, dir.path()).unwrap();
        assert!(matches!(store.get_frame_window("a", 0, 1.0), Err(Error::Capability(_))));
        assert!(matches!(store.get_frame_window("nope", 0, 1.0), Err(Error::NotFound(_))));
    }

    #[test]
    fn sequence_row_count_checked() {
        let dir = tempfile::tempdir().unwrap();
        let vm = write_video(dir.path(), "a", 2, &[(0, vec![1.0, 0.0])], Some((6, vec![1.0, 0.0])), 100);
        assert!(load_corpus(&CorpusManifest { videos: vec![vm] }, dir.path()).is_err());
    }

    #[test]
    fn blob_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let vals = vec![1.5f32, -0.0, f32::MIN_POSITIVE, 3.4e38, -7.25];
        let p = dir.path().join("x.f32");
        write_f32le_file(&p, &vals).unwrap();
        let back = read_f32le_file(&p).unwrap();
        assert_eq!(vals.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), back.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(std::fs::read(&p).unwrap()[..4], 1.5f32.to_le_bytes());
    }
}
