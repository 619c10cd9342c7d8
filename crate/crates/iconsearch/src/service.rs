//! Search state shared by the HTTP handlers and the command line.
//!
//! Everything here is immutable once built, so requests share it without
//! locking.

use std::fmt;

use axum::http::StatusCode;
use iconsearch_core::notation::parse_notation;
use iconsearch_core::retrieval::{multimodal_search, EndpointEncoder, TableEncoder};
use iconsearch_core::{
    AggregatedNotation, Corpus, CorpusStats, EncoderAdapter, EncoderError, FlatIndex, IndexError, IvfIndex,
    KnnIndex, PipelineError, Query, Ranking, SchemeStore, SearchParams, TfIdfIndex,
};
use serde::Serialize;

use crate::config::ServiceConfig;

/// Largest accepted image upload.
pub const MAX_IMAGE_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Multimodal,
    Tfidf,
}

impl std::str::FromStr for Mode {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, ApiError> {
        match s {
            "multimodal" => Ok(Mode::Multimodal),
            "tfidf" => Ok(Mode::Tfidf),
            other => Err(ApiError::bad_request(format!(
                "mode must be multimodal or tfidf, got {other:?}"
            ))),
        }
    }
}

/// An error with the HTTP status it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.message, self.status.as_u16())
    }
}

impl std::error::Error for ApiError {}

impl From<EncoderError> for ApiError {
    fn from(e: EncoderError) -> Self {
        let status = match e {
            EncoderError::UnknownQueryKey(_) => StatusCode::UNPROCESSABLE_ENTITY,
            EncoderError::EncoderUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            EncoderError::DimensionMismatch { .. } | EncoderError::ZeroVector => StatusCode::BAD_GATEWAY,
            EncoderError::MalformedTable { .. } | EncoderError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        let status = match e {
            IndexError::InvalidParameter(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Encoder(e) => e.into(),
            PipelineError::Index(e) => e.into(),
            PipelineError::InvalidParams(_) => Self::bad_request(e.to_string()),
            PipelineError::UnknownImage(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

/// Search options as received, before defaults are applied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchOptions {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub probe: Option<usize>,
    pub ranking: Ranking,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitView {
    pub image_id: String,
    pub score: f64,
    pub uri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultimodalResponse {
    pub hits: Vec<HitView>,
    pub notations: Vec<AggregatedNotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TextHit {
    pub code: String,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TfIdfResponse {
    pub notations: Vec<TextHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SearchResponse {
    Multimodal(MultimodalResponse),
    Tfidf(TfIdfResponse),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NotationView {
    pub code: String,
    pub label: String,
    pub parent: Option<String>,
    pub children: Vec<String>,
    pub image_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChildView {
    pub code: String,
    pub label: String,
    pub image_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChildrenView {
    pub code: String,
    pub children: Vec<ChildView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatusView {
    pub corpus: CorpusStats,
    pub dim: usize,
    pub scheme_entries: usize,
    pub index: &'static str,
    pub encoder: Option<&'static str>,
    pub image_search: bool,
    pub default_k: usize,
    pub default_n: usize,
}

pub struct Service {
    scheme: SchemeStore,
    corpus: Corpus,
    index: Box<dyn KnnIndex>,
    index_kind: &'static str,
    tfidf: TfIdfIndex,
    encoder: Option<EncoderAdapter>,
    default_k: usize,
    default_n: usize,
    default_probe: Option<usize>,
}

impl fmt::Debug for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Service")
            .field("images", &self.corpus.len())
            .field("scheme_entries", &self.scheme.len())
            .field("index", &self.index_kind)
            .field("encoder", &self.encoder.as_ref().map(EncoderAdapter::kind))
            .finish()
    }
}

impl Service {
    /// Loads every configured input. An external endpoint, when configured,
    /// takes precedence over a precomputed table.
    pub fn from_config(config: &ServiceConfig) -> anyhow::Result<Self> {
        config.validate_paths()?;
        let scheme = SchemeStore::load(&config.scheme)?;
        let (corpus, report) = Corpus::ingest(&config.embeddings, &config.metadata)?;
        if report.unparsed_notations > 0 {
            tracing::warn!(count = report.unparsed_notations, "corpus carries codes outside the notation grammar");
        }
        let dim = corpus.matrix().dim();
        let encoder = match (&config.encoder_endpoint, &config.adapter_table) {
            (Some(url), _) => Some(EncoderAdapter::Endpoint(EndpointEncoder::with_limits(
                url.clone(),
                dim,
                config.encoder_timeout,
                config.encoder_max_in_flight,
            ))),
            (None, Some(table)) => Some(EncoderAdapter::Table(TableEncoder::load(table, dim)?)),
            (None, None) => None,
        };
        Self::from_parts(config, scheme, corpus, encoder)
    }

    pub fn from_parts(
        config: &ServiceConfig,
        scheme: SchemeStore,
        corpus: Corpus,
        encoder: Option<EncoderAdapter>,
    ) -> anyhow::Result<Self> {
        let flat = FlatIndex::build(corpus.matrix().clone(), corpus.row_ids().to_vec())?;
        let (index, index_kind): (Box<dyn KnnIndex>, _) = match config.ivf_partitions {
            Some(parts) if !flat.is_empty() => (Box::new(IvfIndex::build(flat, parts, config.seed)?), "ivf"),
            _ => (Box::new(flat), "flat"),
        };
        let tfidf = TfIdfIndex::build(scheme.entries())?;
        Ok(Self {
            scheme,
            corpus,
            index,
            index_kind,
            tfidf,
            encoder,
            default_k: config.default_k,
            default_n: config.default_n,
            default_probe: config.default_probe,
        })
    }

    pub fn scheme(&self) -> &SchemeStore {
        &self.scheme
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    fn params(&self, options: &SearchOptions) -> Result<SearchParams, ApiError> {
        let params = SearchParams {
            k: options.k.unwrap_or(self.default_k),
            n: options.n.unwrap_or(self.default_n),
            probe: options.probe.or(self.default_probe),
            ranking: options.ranking,
        };
        for (name, value) in [("k", params.k), ("n", params.n), ("probe", params.probe.unwrap_or(1))] {
            if value == 0 {
                return Err(ApiError::bad_request(format!("{name} must be at least 1")));
            }
        }
        Ok(params)
    }

    pub fn search_text(&self, q: &str, mode: Mode, options: &SearchOptions) -> Result<SearchResponse, ApiError> {
        if q.trim().is_empty() {
            return Err(ApiError::bad_request("q must not be empty"));
        }
        let params = self.params(options)?;
        match mode {
            Mode::Multimodal => self.multimodal(&Query::text(q), &params).map(SearchResponse::Multimodal),
            Mode::Tfidf => Ok(SearchResponse::Tfidf(self.tfidf(q, params.n))),
        }
    }

    pub fn search_image(&self, bytes: Vec<u8>, options: &SearchOptions) -> Result<MultimodalResponse, ApiError> {
        if !self.encoder.as_ref().is_some_and(EncoderAdapter::can_encode_images) {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "no image encoder endpoint is configured",
            ));
        }
        if bytes.is_empty() {
            return Err(ApiError::bad_request("image body is empty"));
        }
        if bytes.len() > MAX_IMAGE_BYTES {
            return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "image exceeds 16 MiB"));
        }
        let params = self.params(options)?;
        self.multimodal(&Query::Image(bytes), &params)
    }

    fn multimodal(&self, query: &Query, params: &SearchParams) -> Result<MultimodalResponse, ApiError> {
        let encoder = self
            .encoder
            .as_ref()
            .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no query encoder is configured"))?;
        let result = multimodal_search(&self.corpus, self.index.as_ref(), &self.scheme, encoder, query, params)?;
        let hits = result
            .hits
            .into_iter()
            .map(|hit| {
                let uri = self
                    .corpus
                    .get_image(&hit.image_id)
                    .ok()
                    .and_then(|r| r.source_uri.clone());
                HitView {
                    image_id: hit.image_id,
                    score: hit.score,
                    uri,
                }
            })
            .collect();
        Ok(MultimodalResponse {
            hits,
            notations: result.notations,
        })
    }

    fn tfidf(&self, q: &str, n: usize) -> TfIdfResponse {
        let notations = self
            .tfidf
            .query(q, n)
            .into_iter()
            .map(|(code, score)| TextHit {
                label: self.scheme.label_or_unlabeled(&code).to_string(),
                code,
                score,
            })
            .collect();
        TfIdfResponse { notations }
    }

    /// A code is known if the scheme labels it, the scheme implies it as a
    /// parent, or some corpus image carries it.
    fn is_known(&self, code: &str) -> bool {
        self.scheme.contains(code) || self.scheme.is_gap(code) || !self.corpus.images_for_notation(code).is_empty()
    }

    pub fn notation(&self, code: &str) -> Result<NotationView, ApiError> {
        if !self.is_known(code) {
            return Err(ApiError::not_found(format!("unknown notation {code:?}")));
        }
        let parent = parse_notation(code)
            .ok()
            .and_then(|n| n.parent())
            .map(|p| p.as_str().to_string());
        Ok(NotationView {
            code: code.to_string(),
            label: self.scheme.label_or_unlabeled(code).to_string(),
            parent,
            children: self.scheme.children(code).to_vec(),
            image_count: self.corpus.images_for_notation(code).len(),
        })
    }

    pub fn children(&self, code: &str) -> Result<ChildrenView, ApiError> {
        let view = self.notation(code)?;
        let children = view
            .children
            .into_iter()
            .map(|child| ChildView {
                label: self.scheme.label_or_unlabeled(&child).to_string(),
                image_count: self.corpus.images_for_notation(&child).len(),
                code: child,
            })
            .collect();
        Ok(ChildrenView { code: view.code, children })
    }

    pub fn image(&self, image_id: &str) -> Result<iconsearch_core::ImageRecord, ApiError> {
        self.corpus
            .get_image(image_id)
            .cloned()
            .map_err(|_| ApiError::not_found(format!("unknown image {image_id:?}")))
    }

    pub fn status(&self) -> StatusView {
        StatusView {
            corpus: self.corpus.stats(),
            dim: self.corpus.matrix().dim(),
            scheme_entries: self.scheme.len(),
            index: self.index_kind,
            encoder: self.encoder.as_ref().map(EncoderAdapter::kind),
            image_search: self.encoder.as_ref().is_some_and(EncoderAdapter::can_encode_images),
            default_k: self.default_k,
            default_n: self.default_n,
        }
    }
}
