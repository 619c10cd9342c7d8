#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use iconsearch::{Service, ServiceConfig};
use iconsearch_core::testkit::{street_corpus, STREET_DIM, STREET_SCHEME};
use iconsearch_core::vector::{write_icnx, EmbeddingMatrix};
use serde_json::Value;
use tower::ServiceExt;

/// Street corpus, scheme and query table written to disk.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub query: Vec<f32>,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (rows, records, query) = street_corpus();
        let root = dir.path();
        std::fs::write(root.join("scheme.tsv"), STREET_SCHEME).unwrap();
        let matrix = EmbeddingMatrix::from_rows(STREET_DIM, &rows).unwrap();
        let labels: Vec<String> = records.iter().map(|r| r.image_id.clone()).collect();
        write_icnx(root.join("raw.icnx"), &matrix, &labels).unwrap();
        let metadata: String = records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect();
        std::fs::write(root.join("raw.jsonl"), metadata).unwrap();
        let mut dog = vec![0.0f32; STREET_DIM];
        dog[0] = -1.0;
        let table = format!(
            "{}\n{}\n",
            serde_json::json!({"key": "street", "vector": query}),
            serde_json::json!({"key": "dog", "vector": dog}),
        );
        std::fs::write(root.join("table.jsonl"), table).unwrap();
        std::fs::create_dir(root.join("static")).unwrap();
        std::fs::write(root.join("static/index.html"), "<h1>iconsearch</h1>").unwrap();
        Self { dir, query }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Writes a config file with the given extra lines and returns its path.
    pub fn config(&self, extra: &str) -> PathBuf {
        let path = self.path("iconsearch.conf");
        let text = format!(
            "scheme = scheme.tsv\nembeddings = raw.icnx\nmetadata = raw.jsonl\nstatic_dir = static\n{extra}"
        );
        std::fs::write(&path, text).unwrap();
        path
    }

    pub fn service(&self, extra: &str) -> Arc<Service> {
        let config = ServiceConfig::load_with_env(self.config(extra), std::iter::empty()).unwrap();
        Arc::new(Service::from_config(&config).unwrap())
    }

    pub fn router(&self, extra: &str) -> Router {
        iconsearch::api::router(self.service(extra), Some(&self.path("static")))
    }
}

pub async fn send(router: &Router, request: Request<Body>) -> (StatusCode, Vec<u8>) {
    let response = router.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let body = axum::body::to_bytes(response.into_body(), usize::MAX).await.unwrap();
    (status, body.to_vec())
}

pub async fn get(router: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body) = send(router, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
}

pub fn codes(body: &Value) -> Vec<String> {
    body["notations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["code"].as_str().unwrap().to_string())
        .collect()
}
