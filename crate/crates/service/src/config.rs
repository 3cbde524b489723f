use std::net::SocketAddr;
use std::path::PathBuf;

use grab_core::index::IndexMode;

pub const DEFAULT_LISTEN_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_ANNOTATION_LOG: &str = "annotations.jsonl";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} is not set")]
    Missing(&'static str),
    #[error("{var}: {message}")]
    Invalid { var: &'static str, message: String },
}

/// Service settings, read from `GRAB_*` environment variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    /// `GRAB_MANIFEST`: corpus manifest (required).
    pub manifest: PathBuf,
    /// `GRAB_INDEX_MODE`: `exact` or `approx`; unset picks by corpus size.
    pub index_mode: Option<IndexMode>,
    /// `GRAB_EMBED_PROVIDER_URL`: text-embedding sidecar; unset disables text queries.
    pub embed_provider_url: Option<String>,
    /// `GRAB_ANNOTATION_LOG`: defaults to `annotations.jsonl` beside the manifest.
    pub annotation_log: PathBuf,
    /// `GRAB_LISTEN_ADDR`: defaults to 127.0.0.1:8080.
    pub listen_addr: SocketAddr,
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds the config from any variable lookup; empty values count as unset.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let get = |k: &str| lookup(k).filter(|v| !v.trim().is_empty());
        let manifest = PathBuf::from(get("GRAB_MANIFEST").ok_or(ConfigError::Missing("GRAB_MANIFEST"))?);
        let index_mode = get("GRAB_INDEX_MODE")
            .map(|v| v.trim().parse::<IndexMode>())
            .transpose()
            .map_err(|e| ConfigError::Invalid { var: "GRAB_INDEX_MODE", message: e.to_string() })?;
        let annotation_log = get("GRAB_ANNOTATION_LOG").map(PathBuf::from).unwrap_or_else(|| {
            manifest
                .parent()
                .map(|d| d.join(DEFAULT_ANNOTATION_LOG))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_ANNOTATION_LOG))
        });
        let listen_addr = get("GRAB_LISTEN_ADDR")
            .unwrap_or_else(|| DEFAULT_LISTEN_ADDR.to_string())
            .trim()
            .parse()
            .map_err(|e| ConfigError::Invalid { var: "GRAB_LISTEN_ADDR", message: format!("{e}") })?;
        Ok(Self {
            manifest,
            index_mode,
            embed_provider_url: get("GRAB_EMBED_PROVIDER_URL"),
            annotation_log,
            listen_addr,
        })
    }
}
