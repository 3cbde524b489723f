//! Client for the text-embedding sidecar.
//!
//! The sidecar takes `POST {"text": ...}` and answers `{"embedding": [f32...]}`.
//! Vectors are normalized on receipt and cached by text for the process lifetime.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("no embedding provider configured; send query embeddings instead of text")]
    NotConfigured,
    #[error("embedding provider unavailable: {0}")]
    Unavailable(String),
    #[error("embedding provider returned {actual} dimensions, corpus has {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("embedding provider returned an invalid response: {0}")]
    BadResponse(String),
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f32>,
}

pub struct EmbedClient {
    url: String,
    http: reqwest::Client,
    cache: Mutex<HashMap<String, Vec<f32>>>,
}

impl EmbedClient {
    pub fn new(url: impl Into<String>) -> Result<Self, ProviderError> {
        Self::with_timeout(url, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(url: impl Into<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(Self { url: url.into(), http, cache: Mutex::new(HashMap::new()) })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Normalized embedding of `text`, which must have `dim` components.
    pub async fn embed(&self, text: &str, dim: usize) -> Result<Vec<f32>, ProviderError> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(text) {
            if v.len() == dim {
                return Ok(v.clone());
            }
        }
        let resp = self
            .http
            .post(&self.url)
            .json(&serde_json::json!({ "text": text }))
            .send()
            .await
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(ProviderError::Unavailable(format!("provider answered {status}")));
        }
        if !status.is_success() {
            return Err(ProviderError::BadResponse(format!("provider answered {status}")));
        }
        let body: EmbedResponse = resp
            .json()
            .await
            .map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        if body.embedding.len() != dim {
            return Err(ProviderError::Dimension { expected: dim, actual: body.embedding.len() });
        }
        let v = grab_core::vector::normalized(&body.embedding).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        self.cache.lock().expect("cache lock").insert(text.to_string(), v.clone());
        Ok(v)
    }
}
