#![allow(dead_code)]

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::response::IntoResponse;
use axum::routing::post;
use axum::{Json, Router};
use grab_core::index::IndexMode;
use grab_core::store::Store;
use grab_service::{router, AnnotationLog, AppState, Corpus, EmbedClient};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub struct Reply {
    pub status: StatusCode,
    pub body: Vec<u8>,
    pub content_type: Option<String>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    /// The error code of an error response.
    pub fn code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap().to_string()
    }
}

pub async fn send(app: &Router, method: &str, uri: &str, body: Option<&str>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string());
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, body, content_type }
}

pub async fn post_json(app: &Router, uri: &str, body: &Value) -> Reply {
    send(app, "POST", uri, Some(&body.to_string())).await
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, "GET", uri, None).await
}

pub fn app_for(store: Store, log_dir: &Path, provider: Option<EmbedClient>) -> (Router, AppState) {
    let corpus = Corpus::from_store(store, IndexMode::Exact).unwrap();
    let log = AnnotationLog::open(&log_dir.join("annotations.jsonl")).unwrap();
    let state = AppState::new(corpus, provider, log);
    (router(state.clone()), state)
}

/// A text-embedding sidecar on a loopback port. Known texts map to fixed
/// vectors, "fail" answers 500, and any other text gets a 3-component vector.
pub struct MockProvider {
    pub url: String,
    pub calls: Arc<AtomicUsize>,
}

impl MockProvider {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

pub async fn mock_provider(table: HashMap<String, Vec<f32>>) -> MockProvider {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let table = Arc::new(table);
    let app = Router::new().route(
        "/embed",
        post(move |Json(body): Json<Value>| {
            let counter = counter.clone();
            let table = table.clone();
            async move {
                counter.fetch_add(1, Ordering::SeqCst);
                let text = body["text"].as_str().unwrap_or_default().to_string();
                if text == "fail" {
                    return (StatusCode::INTERNAL_SERVER_ERROR, Json(serde_json::json!({}))).into_response();
                }
                let v = table.get(&text).cloned().unwrap_or_else(|| vec![1.0, 0.0, 0.0]);
                Json(serde_json::json!({ "embedding": v })).into_response()
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    MockProvider { url: format!("http://{addr}/embed"), calls }
}
