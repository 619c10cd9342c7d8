//! Query → neighbor images → ranked notations.
//!
//! The query is embedded by an [`Encoder`], the `k` nearest corpus images are
//! fetched from a [`KnnIndex`], and every notation carried by those images is
//! ranked by how many of them carry it (most first). Ties go to the notation
//! whose best supporting image is closest to the query, then to the lower
//! code.

mod encoder;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::notation::SchemeStore;
use crate::scalar::Scalar;
use crate::vector::{IndexError, KnnIndex, ScoredHit};

pub use encoder::{
    encode_query, Encoder, EncoderAdapter, EncoderError, EndpointEncoder, Query, TableEncoder,
    DEFAULT_ENDPOINT_TIMEOUT, DEFAULT_MAX_IN_FLIGHT,
};

pub const DEFAULT_K: usize = 100;
pub const DEFAULT_N: usize = 20;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("hit image {0:?} is not in the corpus")]
    UnknownImage(String),
    #[error("invalid search parameters: {0}")]
    InvalidParams(&'static str),
}

/// How aggregated notations are ordered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ranking {
    /// Number of neighbor images carrying the code.
    #[default]
    Count,
    /// Sum of the similarities of the images carrying the code. Not the
    /// default ordering; offered as an alternative.
    ScoreSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Neighbor images fetched.
    pub k: usize,
    /// Notations returned.
    pub n: usize,
    /// IVF probe count; ignored by flat indices.
    pub probe: Option<usize>,
    pub ranking: Ranking,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            n: DEFAULT_N,
            probe: None,
            ranking: Ranking::Count,
        }
    }
}

impl SearchParams {
    pub fn new(k: usize, n: usize) -> Self {
        Self {
            k,
            n,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.k == 0 {
            return Err(PipelineError::InvalidParams("k must be at least 1"));
        }
        if self.n == 0 {
            return Err(PipelineError::InvalidParams("n must be at least 1"));
        }
        if self.probe == Some(0) {
            return Err(PipelineError::InvalidParams("probe must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedNotation {
    pub code: String,
    pub label: String,
    pub count: usize,
    pub best_score: f64,
    #[serde(skip)]
    pub score_sum: f64,
}

impl AggregatedNotation {
    fn rank_cmp(&self, other: &Self, ranking: Ranking) -> Ordering {
        let primary = match ranking {
            Ranking::Count => other.count.cmp(&self.count),
            Ranking::ScoreSum => other
                .score_sum
                .total_cmp(&self.score_sum)
                .then_with(|| other.count.cmp(&self.count)),
        };
        primary
            .then_with(|| other.best_score.total_cmp(&self.best_score))
            .then_with(|| self.code.cmp(&other.code))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimodalResult {
    pub hits: Vec<ScoredHit>,
    pub notations: Vec<AggregatedNotation>,
}

/// Tallies the notations of the hit images and returns the top `n`.
///
/// Repeated hit ids are counted once.
pub fn aggregate_notations<S: Scalar>(
    hits: &[ScoredHit],
    corpus: &Corpus<S>,
    labels: &SchemeStore,
    n: usize,
    ranking: Ranking,
) -> Result<Vec<AggregatedNotation>, PipelineError> {
    let mut by_code: BTreeMap<&str, AggregatedNotation> = BTreeMap::new();
    let mut seen = HashSet::new();
    for hit in hits {
        if !seen.insert(hit.image_id.as_str()) {
            continue;
        }
        let record = corpus.get_image(&hit.image_id).map_err(|e| match e {
            CorpusError::NotFound(id) => PipelineError::UnknownImage(id),
            other => unreachable!("get_image only fails with NotFound: {other}"),
        })?;
        for code in &record.notations {
            let entry = by_code.entry(code).or_insert_with(|| AggregatedNotation {
                code: code.clone(),
                label: labels.label_or_unlabeled(code).to_string(),
                count: 0,
                best_score: f64::NEG_INFINITY,
                score_sum: 0.0,
            });
            entry.count += 1;
            entry.best_score = entry.best_score.max(hit.score);
            entry.score_sum += hit.score;
        }
    }
    let mut ranked: Vec<AggregatedNotation> = by_code.into_values().collect();
    ranked.sort_by(|a, b| a.rank_cmp(b, ranking));
    ranked.truncate(n);
    Ok(ranked)
}

/// Neighbor search and aggregation for an already computed query vector.
pub fn search_vector<S: Scalar>(
    corpus: &Corpus<S>,
    index: &dyn KnnIndex,
    labels: &SchemeStore,
    query: &[f64],
    params: &SearchParams,
) -> Result<MultimodalResult, PipelineError> {
    params.validate()?;
    let hits = index.knn(query, params.k, params.probe)?;
    let notations = aggregate_notations(&hits, corpus, labels, params.n, params.ranking)?;
    Ok(MultimodalResult { hits, notations })
}

/// Encodes `query`, fetches its `k` nearest images and aggregates their
/// notations.
pub fn multimodal_search<S: Scalar>(
    corpus: &Corpus<S>,
    index: &dyn KnnIndex,
    labels: &SchemeStore,
    encoder: &dyn Encoder,
    query: &Query,
    params: &SearchParams,
) -> Result<MultimodalResult, PipelineError> {
    params.validate()?;
    let vector = encode_query(encoder, query)?;
    search_vector(corpus, index, labels, &vector, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ImageRecord;
    use crate::vector::{EmbeddingMatrix, FlatIndex};

    fn corpus(records: &[(&str, &[&str])]) -> Corpus<f32> {
        let data: Vec<f32> = (0..records.len()).flat_map(|i| [1.0, i as f32]).collect();
        let matrix = EmbeddingMatrix::new(2, data).unwrap();
        let records = records.iter().enumerate().map(|(row, (id, codes))| ImageRecord {
            image_id: id.to_string(),
            embedding_row: row,
            notations: codes.iter().map(|c| c.to_string()).collect(),
            source_uri: None,
        });
        Corpus::from_records(matrix, records).unwrap().0
    }

    fn hit(id: &str, score: f64) -> ScoredHit {
        ScoredHit {
            image_id: id.into(),
            score,
        }
    }

    #[test]
    fn single_hit() {
        let c = corpus(&[("a", &["25I141"])]);
        let scheme = SchemeStore::parse("25I141\tstreet\n").unwrap();
        let out = aggregate_notations(&[hit("a", 0.7)], &c, &scheme, 10, Ranking::Count).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].code.as_str(), out[0].label.as_str()), ("25I141", "street"));
        assert_eq!(out[0].count, 1);
        assert_eq!(out[0].best_score, 0.7);
    }

    #[test]
    fn ties_fall_back_to_code() {
        let c = corpus(&[("a", &["31D14", "25I141"])]);
        let out = aggregate_notations(&[hit("a", 0.5)], &c, &SchemeStore::default(), 10, Ranking::Count).unwrap();
        let codes: Vec<_> = out.iter().map(|a| a.code.as_str()).collect();
        assert_eq!(codes, ["25I141", "31D14"]);
        assert_eq!(out[0].label, crate::notation::UNLABELED);
    }

    #[test]
    fn best_score_breaks_count_ties() {
        let c = corpus(&[("a", &["1"]), ("b", &["2"])]);
        let out = aggregate_notations(&[hit("a", 0.2), hit("b", 0.9)], &c, &SchemeStore::default(), 10, Ranking::Count)
            .unwrap();
        assert_eq!(out[0].code, "2");
    }

    #[test]
    fn score_sum_ranking_differs_from_count() {
        let c = corpus(&[("a", &["1"]), ("b", &["1"]), ("c", &["2"]), ("d", &["2"]), ("e", &["2"])]);
        let hits = [hit("a", 0.9), hit("b", 0.9), hit("c", 0.1), hit("d", 0.1), hit("e", 0.1)];
        let scheme = SchemeStore::default();
        let by_count = aggregate_notations(&hits, &c, &scheme, 10, Ranking::Count).unwrap();
        let by_sum = aggregate_notations(&hits, &c, &scheme, 10, Ranking::ScoreSum).unwrap();
        assert_eq!(by_count[0].code, "2");
        assert_eq!(by_sum[0].code, "1");
    }

    #[test]
    fn unknown_image() {
        let c = corpus(&[("a", &["1"])]);
        let err = aggregate_notations(&[hit("zz", 0.1)], &c, &SchemeStore::default(), 10, Ranking::Count).unwrap_err();
        assert!(matches!(err, PipelineError::UnknownImage(id) if id == "zz"));
    }

    #[test]
    fn repeated_hit_counted_once() {
        let c = corpus(&[("a", &["1"])]);
        let out = aggregate_notations(&[hit("a", 0.3), hit("a", 0.3)], &c, &SchemeStore::default(), 10, Ranking::Count)
            .unwrap();
        assert_eq!(out[0].count, 1);
    }

    #[test]
    fn k_larger_than_corpus_uses_everything() {
        let c = corpus(&[("a", &["1"]), ("b", &["1", "2"])]);
        let index = FlatIndex::build(c.matrix().clone(), c.row_ids().to_vec()).unwrap();
        let enc = TableEncoder::new(2, [("q".to_string(), vec![1.0, 0.5])]).unwrap();
        let out = multimodal_search(
            &c,
            &index,
            &SchemeStore::default(),
            &enc,
            &Query::text("q"),
            &SearchParams::new(50, 10),
        )
        .unwrap();
        assert_eq!(out.hits.len(), 2);
        assert_eq!(out.notations[0].code, "1");
        assert_eq!(out.notations[0].count, 2);
    }

    #[test]
    fn empty_corpus() {
        let c = corpus(&[]);
        let index = FlatIndex::build(c.matrix().clone(), vec![]).unwrap();
        let enc = TableEncoder::new(2, [("q".to_string(), vec![1.0, 0.0])]).unwrap();
        let out =
            multimodal_search(&c, &index, &SchemeStore::default(), &enc, &Query::text("q"), &SearchParams::default())
                .unwrap();
        assert!(out.hits.is_empty() && out.notations.is_empty());
    }

    #[test]
    fn zero_params_rejected() {
        let c = corpus(&[("a", &["1"])]);
        let index = FlatIndex::build(c.matrix().clone(), c.row_ids().to_vec()).unwrap();
        let err = search_vector(&c, &index, &SchemeStore::default(), &[1.0, 0.0], &SearchParams::new(0, 1));
        assert!(matches!(err, Err(PipelineError::InvalidParams(_))));
    }
}
