//! Exact and partitioned top-K cosine similarity search over embedding rows.

mod flat;
mod icnx;
mod ivf;
pub mod kmeans;
mod matrix;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flat::{build_flat, FlatIndex};
pub use icnx::{read_icnx, write_icnx, ICNX_MAGIC, ICNX_VERSION};
pub use ivf::{build_ivf, IvfIndex};
pub use matrix::{normalize, normalize_vector, EmbeddingMatrix};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("row {row} is a zero vector and cannot be normalized")]
    ZeroVector { row: usize },
    #[error("dimension mismatch: index has dim {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("duplicate image id {0:?}")]
    DuplicateId(String),
    #[error("cannot build {partitions} partitions from {rows} rows")]
    TooFewRows { partitions: usize, rows: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("index file I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad index file: {0}")]
    Format(String),
}

/// One neighbor returned by a similarity query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub image_id: String,
    /// Cosine similarity, clamped to [-1, 1].
    pub score: f64,
}

/// Common query surface of the flat and partitioned indices.
pub trait KnnIndex: Send + Sync {
    fn dim(&self) -> usize;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Top-`k` neighbors of `query`. `probe` is only meaningful for
    /// partitioned indices; `None` probes everything.
    fn knn(&self, query: &[f64], k: usize, probe: Option<usize>) -> Result<Vec<ScoredHit>, IndexError>;
}

#[derive(Debug, Clone, Copy)]
struct Candidate<'a> {
    score: f64,
    id: &'a str,
}

impl Candidate<'_> {
    /// Result order: higher score first, then ascending id.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.id.cmp(other.id))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// Bounded collector that keeps the `k` best candidates; the heap top is the
/// worst kept candidate.
struct TopK<'a> {
    k: usize,
    heap: BinaryHeap<Candidate<'a>>,
}

impl<'a> TopK<'a> {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k.saturating_add(1).min(4096)),
        }
    }

    #[inline]
    fn push(&mut self, score: f64, id: &'a str) {
        if self.k == 0 {
            return;
        }
        let cand = Candidate {
            score: score.clamp(-1.0, 1.0),
            id,
        };
        if self.heap.len() < self.k {
            self.heap.push(cand);
        } else if let Some(worst) = self.heap.peek() {
            if cand < *worst {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }

    fn into_hits(self) -> Vec<ScoredHit> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| ScoredHit {
                image_id: c.id.to_string(),
                score: c.score,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_orders_by_score_then_id() {
        let mut top = TopK::new(3);
        for (s, id) in [(0.5, "d"), (0.9, "b"), (0.5, "a"), (0.1, "z"), (0.9, "c")] {
            top.push(s, id);
        }
        let ids: Vec<_> = top.into_hits().into_iter().map(|h| h.image_id).collect();
        assert_eq!(ids, ["b", "c", "a"]);
    }

    #[test]
    fn topk_zero_keeps_nothing() {
        let mut top = TopK::new(0);
        top.push(1.0, "a");
        assert!(top.into_hits().is_empty());
    }
}
