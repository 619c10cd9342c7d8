//! Adapters that turn a text or image query into an embedding.
//!
//! No model runs in-process. A [`TableEncoder`] looks vectors up in a
//! precomputed key → vector file; an [`EndpointEncoder`] calls an external
//! dual-encoder over HTTP:
//!
//! ```text
//! POST <url>  {"kind": "text" | "image", "payload": "<utf-8 text or base64 bytes>"}
//!          →  {"vector": [f32, ...]}
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::normalize_vector;

pub const DEFAULT_ENDPOINT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("no precomputed vector for query {0:?}")]
    UnknownQueryKey(String),
    #[error("encoder unavailable: {0}")]
    EncoderUnavailable(String),
    #[error("encoder returned dimension {actual}, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("encoder returned a zero vector")]
    ZeroVector,
    #[error("encoder table line {line}: {message}")]
    MalformedTable { line: usize, message: String },
    #[error("failed to read encoder table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Text(String),
    Image(Vec<u8>),
}

impl Query {
    pub fn text(s: impl Into<String>) -> Self {
        Query::Text(s.into())
    }
}

pub trait Encoder: Send + Sync {
    fn dim(&self) -> usize;

    /// Unit-normalized embedding of `query`.
    fn encode(&self, query: &Query) -> Result<Vec<f64>, EncoderError>;
}

fn checked_unit(vector: &[f64], dim: usize) -> Result<Vec<f64>, EncoderError> {
    if vector.len() != dim {
        return Err(EncoderError::DimensionMismatch {
            expected: dim,
            actual: vector.len(),
        });
    }
    normalize_vector(vector).map_err(|_| EncoderError::ZeroVector)
}

#[derive(Debug, Deserialize)]
struct TableLine {
    key: String,
    vector: Vec<f64>,
}

/// Precomputed key → vector lookup for text queries.
#[derive(Debug, Clone)]
pub struct TableEncoder {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl TableEncoder {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self, EncoderError> {
        let mut table = HashMap::new();
        for (key, vector) in entries {
            let unit = checked_unit(&vector, dim)?;
            table.insert(key, unit);
        }
        Ok(Self { dim, table })
    }

    /// Reads JSONL lines `{"key": ..., "vector": [...]}`; every vector must
    /// have dimension `dim`.
    pub fn load(path: impl AsRef<Path>, dim: usize) -> Result<Self, EncoderError> {
        let reader = BufReader::new(File::open(path)?);
        let mut table = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| EncoderError::MalformedTable {
                line: idx + 1,
                message,
            };
            let entry: TableLine = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            let unit = checked_unit(&entry.vector, dim).map_err(|e| malformed(e.to_string()))?;
            if table.insert(entry.key.clone(), unit).is_some() {
                return Err(malformed(format!("duplicate key {:?}", entry.key)));
            }
        }
        Ok(Self { dim, table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Encoder for TableEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, query: &Query) -> Result<Vec<f64>, EncoderError> {
        match query {
            Query::Text(key) => self
                .table
                .get(key)
                .cloned()
                .ok_or_else(|| EncoderError::UnknownQueryKey(key.clone())),
            Query::Image(_) => Err(EncoderError::EncoderUnavailable(
                "precomputed table cannot encode images".into(),
            )),
        }
    }
}

#[derive(Debug, Serialize)]
struct EncodeRequest<'a> {
    kind: &'a str,
    payload: String,
}

#[derive(Debug, Deserialize)]
struct EncodeResponse {
    vector: Vec<f64>,
}

/// Counting semaphore bounding concurrent endpoint calls.
#[derive(Debug)]
struct InFlightLimit {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            current: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut current = self.current.lock().unwrap_or_else(|e| e.into_inner());
        while *current >= self.max {
            current = self.freed.wait(current).unwrap_or_else(|e| e.into_inner());
        }
        *current += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlightLimit);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut current = self.0.current.lock().unwrap_or_else(|e| e.into_inner());
        *current -= 1;
        self.0.freed.notify_one();
    }
}

/// Client for an external dual-encoder service.
#[derive(Debug)]
pub struct EndpointEncoder {
    url: String,
    dim: usize,
    agent: ureq::Agent,
    limit: InFlightLimit,
}

impl EndpointEncoder {
    pub fn new(url: impl Into<String>, dim: usize) -> Self {
        Self::with_limits(url, dim, DEFAULT_ENDPOINT_TIMEOUT, DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_limits(url: impl Into<String>, dim: usize, timeout: Duration, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Self {
            url: url.into(),
            dim,
            agent,
            limit: InFlightLimit::new(max_in_flight),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Encoder for EndpointEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, query: &Query) -> Result<Vec<f64>, EncoderError> {
        let request = match query {
            Query::Text(text) => EncodeRequest {
                kind: "text",
                payload: text.clone(),
            },
            Query::Image(bytes) => EncodeRequest {
                kind: "image",
                payload: BASE64.encode(bytes),
            },
        };
        let _permit = self.limit.acquire();
        let unavailable = |e: ureq::Error| EncoderError::EncoderUnavailable(e.to_string());
        let response: EncodeResponse = self
            .agent
            .post(&self.url)
            .send_json(&request)
            .map_err(unavailable)?
            .body_mut()
            .read_json()
            .map_err(unavailable)?;
        checked_unit(&response.vector, self.dim)
    }
}

/// The two supported encoder back ends.
#[derive(Debug)]
pub enum EncoderAdapter {
    Table(TableEncoder),
    Endpoint(EndpointEncoder),
}

impl EncoderAdapter {
    pub fn kind(&self) -> &'static str {
        match self {
            EncoderAdapter::Table(_) => "precomputed-table",
            EncoderAdapter::Endpoint(_) => "external-endpoint",
        }
    }

    pub fn can_encode_images(&self) -> bool {
        matches!(self, EncoderAdapter::Endpoint(_))
    }
}

impl Encoder for EncoderAdapter {
    fn dim(&self) -> usize {
        match self {
            EncoderAdapter::Table(t) => t.dim(),
            EncoderAdapter::Endpoint(e) => e.dim(),
        }
    }

    fn encode(&self, query: &Query) -> Result<Vec<f64>, EncoderError> {
        match self {
            EncoderAdapter::Table(t) => t.encode(query),
            EncoderAdapter::Endpoint(e) => e.encode(query),
        }
    }
}

pub fn encode_query(adapter: &dyn Encoder, query: &Query) -> Result<Vec<f64>, EncoderError> {
    adapter.encode(query)
}
