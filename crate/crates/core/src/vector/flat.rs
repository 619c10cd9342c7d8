use std::collections::HashSet;
use std::path::Path;

use crate::scalar::{dot, Scalar};

use super::icnx::{read_icnx, write_icnx};
use super::matrix::{normalize_vector, EmbeddingMatrix};
use super::{IndexError, KnnIndex, ScoredHit, TopK};

/// Exhaustive inner-product index over unit-normalized rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatIndex<S> {
    matrix: EmbeddingMatrix<S>,
    ids: Vec<String>,
}

/// Normalizes `matrix` and pairs each row with its image id.
pub fn build_flat<S: Scalar>(
    matrix: EmbeddingMatrix<S>,
    ids: Vec<String>,
) -> Result<FlatIndex<S>, IndexError> {
    FlatIndex::build(matrix, ids)
}

impl<S: Scalar> FlatIndex<S> {
    pub fn build(matrix: EmbeddingMatrix<S>, ids: Vec<String>) -> Result<Self, IndexError> {
        if ids.len() != matrix.count() {
            return Err(IndexError::ShapeMismatch {
                expected: matrix.count(),
                actual: ids.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(IndexError::DuplicateId(id.clone()));
            }
        }
        let matrix = matrix.normalize()?;
        Ok(Self { matrix, ids })
    }

    pub fn matrix(&self) -> &EmbeddingMatrix<S> {
        &self.matrix
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Exact top-`k` by cosine similarity. The query is normalized here.
    pub fn search<Q: Scalar>(&self, query: &[Q], k: usize) -> Result<Vec<ScoredHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidParameter("k must be positive"));
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let query = self.prepare_query(query)?;
        Ok(self.scan(&query, 0..self.len(), k))
    }

    pub(crate) fn prepare_query<Q: Scalar>(&self, query: &[Q]) -> Result<Vec<f64>, IndexError> {
        if query.len() != self.dim() {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim(),
                actual: query.len(),
            });
        }
        normalize_vector(query)
    }

    /// Scores the given rows against an already normalized query.
    pub(crate) fn scan(
        &self,
        query: &[f64],
        rows: impl IntoIterator<Item = usize>,
        k: usize,
    ) -> Vec<ScoredHit> {
        let mut top = TopK::new(k);
        for row in rows {
            top.push(dot(self.matrix.row(row), query), &self.ids[row]);
        }
        top.into_hits()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        write_icnx(path, &self.matrix, &self.ids)
    }

    /// Loads an index written by [`FlatIndex::save`]; rows are re-normalized.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let (matrix, ids) = read_icnx(path)?;
        Self::build(matrix, ids)
    }
}

impl<S: Scalar> KnnIndex for FlatIndex<S> {
    fn dim(&self) -> usize {
        FlatIndex::dim(self)
    }

    fn len(&self) -> usize {
        FlatIndex::len(self)
    }

    fn knn(&self, query: &[f64], k: usize, _probe: Option<usize>) -> Result<Vec<ScoredHit>, IndexError> {
        self.search(query, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i:04}")).collect()
    }

    #[test]
    fn empty_index_returns_nothing() {
        let index = FlatIndex::build(EmbeddingMatrix::<f32>::empty(4).unwrap(), vec![]).unwrap();
        assert!(index.search(&[1.0f32, 0.0, 0.0, 0.0], 5).unwrap().is_empty());
        assert!(index.search(&[1.0f32], 5).unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_rejected() {
        let m = EmbeddingMatrix::<f32>::from_rows(2, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let err = FlatIndex::build(m, vec!["a".into(), "a".into()]).unwrap_err();
        assert!(matches!(err, IndexError::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn id_count_must_match_rows() {
        let m = EmbeddingMatrix::<f32>::from_rows(2, &[[1.0, 0.0]]).unwrap();
        assert!(matches!(
            FlatIndex::build(m, ids(2)),
            Err(IndexError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn self_similarity_ranks_first() {
        let rows = [[1.0f32, 2.0, 3.0], [3.0, 2.0, 1.0], [0.0, 1.0, 0.0]];
        let index = FlatIndex::build(EmbeddingMatrix::from_rows(3, &rows).unwrap(), ids(3)).unwrap();
        let hits = index.search(&rows[1], 3).unwrap();
        assert_eq!(hits[0].image_id, "img0001");
        assert!((hits[0].score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn orthogonal_query_ties_by_id() {
        let rows = [[0.0f32, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let index = FlatIndex::build(
            EmbeddingMatrix::from_rows(3, &rows).unwrap(),
            vec!["c".into(), "a".into(), "b".into()],
        )
        .unwrap();
        let hits = index.search(&[2.0f64, 0.0, 0.0], 10).unwrap();
        let got: Vec<_> = hits.iter().map(|h| h.image_id.as_str()).collect();
        assert_eq!(got, ["a", "b", "c"]);
        assert!(hits.iter().all(|h| h.score.abs() < 1e-6));
    }

    #[test]
    fn dimension_mismatch() {
        let index = FlatIndex::build(
            EmbeddingMatrix::<f32>::from_rows(2, &[[1.0, 0.0]]).unwrap(),
            ids(1),
        )
        .unwrap();
        assert!(matches!(
            index.search(&[1.0f32, 0.0, 0.0], 1),
            Err(IndexError::DimensionMismatch { expected: 2, actual: 3 })
        ));
        assert!(matches!(
            index.search(&[1.0f32, 0.0], 0),
            Err(IndexError::InvalidParameter(_))
        ));
    }
}
