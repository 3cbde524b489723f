use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crate::provider::ProviderError;

/// An error response: `{"error": {"code", "message"}}` with an HTTP status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn invalid_boundaries(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_boundaries", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status.as_u16(), self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<grab_core::Error> for ApiError {
    fn from(e: grab_core::Error) -> Self {
        use grab_core::Error as E;
        let message = e.to_string();
        match e {
            E::Input(_) => Self::new(StatusCode::BAD_REQUEST, "invalid_parameter", message),
            E::DimensionMismatch { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "dimension_mismatch", message),
            E::NotFound(_) => Self::not_found(message),
            E::Capability(_) => Self::new(StatusCode::CONFLICT, "capability_unavailable", message),
            _ => Self::internal(message),
        }
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        let message = e.to_string();
        match e {
            ProviderError::NotConfigured | ProviderError::Unavailable(_) => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "provider_unavailable", message)
            }
            ProviderError::Dimension { .. } | ProviderError::BadResponse(_) => {
                Self::new(StatusCode::BAD_GATEWAY, "provider_bad_response", message)
            }
        }
    }
}

impl From<tokio::task::JoinError> for ApiError {
    fn from(e: tokio::task::JoinError) -> Self {
        Self::internal(format!("worker task failed: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

/// Parses a JSON request body, mapping any failure to 400.
pub(crate) fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(format!("invalid JSON body: {e}")))
}
