//! Multimodal concept retrieval over Iconclass-annotated images.
//!
//! A query embedding is matched against the embeddings of an annotated image
//! corpus; the notations carried by the nearest images are aggregated into a
//! ranked concept list. A TF-IDF search over notation labels and a blinded
//! preference-evaluation harness sit alongside.
//!
//! Vector math is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the storage precision used by the service.

pub mod corpus;
pub mod eval;
pub mod notation;
pub mod retrieval;
pub mod scalar;
pub mod text;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod vector;

pub use corpus::{CorpusError, CorpusStats, ImageRecord, IngestReport};
pub use notation::{Notation, NotationError, SchemeError, SchemeStore};
pub use retrieval::{
    AggregatedNotation, Encoder, EncoderAdapter, EncoderError, MultimodalResult, PipelineError, Query, Ranking,
    SearchParams,
};
pub use text::{TfIdfIndex, TextIndexError};
pub use scalar::Scalar;
pub use vector::{IndexError, KnnIndex, ScoredHit};

pub type EmbeddingMatrix = vector::EmbeddingMatrix<f32>;
pub type EmbeddingMatrix64 = vector::EmbeddingMatrix<f64>;
pub type FlatIndex = vector::FlatIndex<f32>;
pub type FlatIndex64 = vector::FlatIndex<f64>;
pub type IvfIndex = vector::IvfIndex<f32>;
pub type IvfIndex64 = vector::IvfIndex<f64>;
pub type Corpus = corpus::Corpus<f32>;
pub type Corpus64 = corpus::Corpus<f64>;
