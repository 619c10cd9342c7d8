use crate::scalar::{dot, Scalar};

use super::kmeans::{assign, spherical_kmeans, KMeansParams};
use super::{EmbeddingMatrix, FlatIndex, IndexError, KnnIndex, ScoredHit};

/// Inverted-file index: rows are bucketed by nearest k-means centroid and a
/// query scans only the buckets of its best-matching centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct IvfIndex<S> {
    base: FlatIndex<S>,
    centroids: EmbeddingMatrix<S>,
    partitions: Vec<Vec<usize>>,
}

pub fn build_ivf<S: Scalar>(
    matrix: EmbeddingMatrix<S>,
    ids: Vec<String>,
    n_partitions: usize,
    seed: u64,
) -> Result<IvfIndex<S>, IndexError> {
    IvfIndex::build(FlatIndex::build(matrix, ids)?, n_partitions, seed)
}

impl<S: Scalar> IvfIndex<S> {
    /// Partitions an existing flat index. Deterministic for a given seed.
    pub fn build(base: FlatIndex<S>, n_partitions: usize, seed: u64) -> Result<Self, IndexError> {
        let km = spherical_kmeans(base.matrix(), n_partitions, &KMeansParams::with_seed(seed))?;
        let centroid_values: Vec<S> = km.centroids.iter().map(|&x| S::narrow(x)).collect();
        let centroids = EmbeddingMatrix::new(base.dim(), centroid_values)?;

        // Assign against the stored (possibly narrowed) centroids so every
        // row sits in the bucket of its nearest stored centroid.
        let widened: Vec<f64> = centroids.as_slice().iter().map(|x| x.widen()).collect();
        let (assignments, _) = assign(base.matrix(), &widened, n_partitions);
        let mut partitions = vec![Vec::new(); n_partitions];
        for (row, part) in assignments.into_iter().enumerate() {
            partitions[part].push(row);
        }
        Ok(Self {
            base,
            centroids,
            partitions,
        })
    }

    pub fn base(&self) -> &FlatIndex<S> {
        &self.base
    }

    pub fn centroids(&self) -> &EmbeddingMatrix<S> {
        &self.centroids
    }

    pub fn partitions(&self) -> &[Vec<usize>] {
        &self.partitions
    }

    pub fn n_partitions(&self) -> usize {
        self.partitions.len()
    }

    /// Exact top-`k` among the rows of the `n_probe` best-matching partitions.
    pub fn search<Q: Scalar>(
        &self,
        query: &[Q],
        k: usize,
        n_probe: usize,
    ) -> Result<Vec<ScoredHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidParameter("k must be positive"));
        }
        if n_probe == 0 || n_probe > self.n_partitions() {
            return Err(IndexError::InvalidParameter("n_probe must be in 1..=n_partitions"));
        }
        let query = self.base.prepare_query(query)?;
        let probed = self.probe_order(&query);
        let rows = probed[..n_probe]
            .iter()
            .flat_map(|&p| self.partitions[p].iter().copied());
        Ok(self.base.scan(&query, rows, k))
    }

    /// Partition indices ordered by centroid similarity, ties to lower index.
    fn probe_order(&self, query: &[f64]) -> Vec<usize> {
        let scores: Vec<f64> = self.centroids.rows().map(|c| dot(c, query)).collect();
        let mut order: Vec<usize> = (0..self.n_partitions()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        order
    }
}

impl<S: Scalar> KnnIndex for IvfIndex<S> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn len(&self) -> usize {
        self.base.len()
    }

    fn knn(&self, query: &[f64], k: usize, probe: Option<usize>) -> Result<Vec<ScoredHit>, IndexError> {
        let n_probe = probe.unwrap_or(self.n_partitions()).min(self.n_partitions());
        self.search(query, k, n_probe)
    }
}
