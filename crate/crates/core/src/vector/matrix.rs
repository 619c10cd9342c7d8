use crate::scalar::{l2_norm, Scalar};

use super::IndexError;

/// Row-major `count × dim` matrix of embedding vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> EmbeddingMatrix<S> {
    pub fn new(dim: usize, data: Vec<S>) -> Result<Self, IndexError> {
        if dim == 0 {
            return Err(IndexError::ZeroDimension);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(IndexError::ShapeMismatch {
                expected: data.len() / dim * dim + dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn empty(dim: usize) -> Result<Self, IndexError> {
        Self::new(dim, Vec::new())
    }

    pub fn from_rows<R: AsRef<[S]>>(dim: usize, rows: &[R]) -> Result<Self, IndexError> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(IndexError::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[S]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    /// Scales every row to unit L2 norm.
    pub fn normalize(mut self) -> Result<Self, IndexError> {
        for (row_idx, row) in self.data.chunks_exact_mut(self.dim).enumerate() {
            let norm = l2_norm(row);
            if norm == 0.0 || !norm.is_finite() {
                return Err(IndexError::ZeroVector { row: row_idx });
            }
            for x in row.iter_mut() {
                *x = S::narrow(x.widen() / norm);
            }
        }
        Ok(self)
    }

    /// Subset of rows in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            dim: self.dim,
            data,
        }
    }
}

/// Unit-normalizes a single vector into `f64`.
pub fn normalize_vector<S: Scalar>(v: &[S]) -> Result<Vec<f64>, IndexError> {
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return Err(IndexError::ZeroVector { row: 0 });
    }
    Ok(v.iter().map(|x| x.widen() / norm).collect())
}

/// Free-function form of [`EmbeddingMatrix::normalize`].
pub fn normalize<S: Scalar>(matrix: EmbeddingMatrix<S>) -> Result<EmbeddingMatrix<S>, IndexError> {
    matrix.normalize()
}
