use std::path::{Path, PathBuf};

use grab_core::index::{build_index, default_index_path, Index, IndexMode};
use grab_core::store::Store;
use grab_core::Result;

/// An immutable store plus its search index. Requests hold an `Arc` to one
/// snapshot; reload swaps in a new one.
#[derive(Debug)]
pub struct Corpus {
    pub store: Store,
    /// `None` for an empty store.
    pub index: Option<Index>,
    /// Manifest the snapshot came from, used for reload and thumbnails.
    pub manifest: Option<PathBuf>,
}

impl Corpus {
    /// Wraps an in-memory store, building an index in `mode`.
    pub fn from_store(store: Store, mode: IndexMode) -> Result<Self> {
        let index = if store.is_empty() { None } else { Some(build_index(&store, mode)?) };
        Ok(Self { store, index, manifest: None })
    }

    /// Opens `manifest`. A persisted index next to it is reused when it matches
    /// the loaded rows and the requested mode; otherwise one is built.
    pub fn load(manifest: &Path, mode: Option<IndexMode>) -> Result<Self> {
        let store = Store::open(manifest)?;
        let index = if store.is_empty() {
            None
        } else {
            let path = default_index_path(manifest);
            let saved = path
                .exists()
                .then(|| Index::load(&path))
                .transpose()
                .unwrap_or_else(|e| {
                    tracing::warn!("ignoring unreadable index {}: {e}", path.display());
                    None
                })
                .filter(|i| mode.is_none_or(|m| m == i.mode()))
                .filter(|i| match i.check_matches(&store) {
                    Ok(()) => true,
                    Err(e) => {
                        tracing::warn!("ignoring stale index {}: {e}", path.display());
                        false
                    }
                });
            match saved {
                Some(i) => Some(i),
                None => Some(build_index(&store, mode.unwrap_or(IndexMode::default_for(store.len())))?),
            }
        };
        Ok(Self { store, index, manifest: Some(manifest.to_path_buf()) })
    }

    pub fn index_mode(&self) -> Option<IndexMode> {
        self.index.as_ref().map(Index::mode)
    }

    /// Thumbnail file for a frame, from the video's template
    /// (`{video_id}` and `{frame_index}` placeholders, relative to the manifest).
    pub fn thumbnail_path(&self, video_id: &str, frame_index: u64) -> Option<PathBuf> {
        let video = self.store.video_by_id(video_id).ok()?;
        let template = video.thumbnail_template.as_ref()?;
        let rel = template
            .replace("{video_id}", video_id)
            .replace("{frame_index}", &frame_index.to_string());
        let base = self.manifest.as_ref().and_then(|m| m.parent()).unwrap_or(Path::new("."));
        Some(base.join(rel))
    }

    /// URL of the thumbnail route for a frame, when the video has a template.
    pub fn thumbnail_url(&self, video_id: &str, frame_index: u64) -> Option<String> {
        let video = self.store.video_by_id(video_id).ok()?;
        video
            .thumbnail_template
            .as_ref()
            .map(|_| format!("/thumbnails/{}/{frame_index}", percent_encode(video_id)))
    }
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}
