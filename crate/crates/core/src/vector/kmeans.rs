//! Spherical Lloyd's k-means with k-means++ seeding, used as the coarse
//! quantizer of [`IvfIndex`](super::IvfIndex).
//!
//! Rows are assumed unit-normalized; "nearest" means highest inner product
//! and centroids are re-normalized after every update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{dot, Scalar};

use super::{EmbeddingMatrix, IndexError};

pub const DEFAULT_MAX_ITERS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub max_iters: usize,
    pub seed: u64,
}

impl KMeansParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// `k × dim` unit-normalized centroids, row-major.
    pub centroids: Vec<f64>,
    /// Nearest centroid of every row, consistent with `centroids`.
    pub assignments: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn spherical_kmeans<S: Scalar>(
    data: &EmbeddingMatrix<S>,
    k: usize,
    params: &KMeansParams,
) -> Result<KMeansResult, IndexError> {
    let n = data.count();
    let dim = data.dim();
    if k == 0 {
        return Err(IndexError::InvalidParameter("number of partitions must be positive"));
    }
    if k > n {
        return Err(IndexError::TooFewRows {
            partitions: k,
            rows: n,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = kmeans_plus_plus(data, k, &mut rng);
    let (mut assignments, mut sims) = assign(data, &centroids, k);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        iterations += 1;
        update(data, &assignments, &sims, &mut centroids, k, dim);
        let (next, next_sims) = assign(data, &centroids, k);
        let changed = next != assignments;
        assignments = next;
        sims = next_sims;
        if !changed {
            converged = true;
            break;
        }
    }

    Ok(KMeansResult {
        centroids,
        assignments,
        iterations,
        converged,
    })
}

fn kmeans_plus_plus<S: Scalar>(data: &EmbeddingMatrix<S>, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.count();
    let mut chosen = vec![false; n];
    let mut centroids = Vec::with_capacity(k * data.dim());

    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend(data.row(first).iter().map(|x| x.widen()));
    // Squared euclidean distance between unit vectors is 2 - 2·cos.
    let mut dist2: Vec<f64> = data
        .rows()
        .map(|row| (2.0 - 2.0 * dot(row, &centroids[..])).max(0.0))
        .collect();

    for _ in 1..k {
        let total: f64 = dist2.iter().zip(&chosen).filter(|(_, c)| !**c).map(|(d, _)| d).sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in dist2.iter().enumerate() {
                if chosen[i] || *d <= 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight implies a candidate")
        } else {
            // Every remaining row coincides with a center; pick any unused one.
            let unused: Vec<usize> = (0..n).filter(|i| !chosen[*i]).collect();
            unused[rng.random_range(0..unused.len())]
        };
        chosen[next] = true;
        let start = centroids.len();
        centroids.extend(data.row(next).iter().map(|x| x.widen()));
        let center = &centroids[start..];
        for (row, d) in data.rows().zip(dist2.iter_mut()) {
            let nd = (2.0 - 2.0 * dot(row, center)).max(0.0);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Nearest centroid (ties to the lowest index) and its similarity, per row.
pub(crate) fn assign<S: Scalar>(
    data: &EmbeddingMatrix<S>,
    centroids: &[f64],
    k: usize,
) -> (Vec<usize>, Vec<f64>) {
    let dim = data.dim();
    let mut assignments = Vec::with_capacity(data.count());
    let mut sims = Vec::with_capacity(data.count());
    for row in data.rows() {
        let mut best = (0, f64::NEG_INFINITY);
        for c in 0..k {
            let s = dot(row, &centroids[c * dim..(c + 1) * dim]);
            if s > best.1 {
                best = (c, s);
            }
        }
        assignments.push(best.0);
        sims.push(best.1);
    }
    (assignments, sims)
}

fn update<S: Scalar>(
    data: &EmbeddingMatrix<S>,
    assignments: &[usize],
    sims: &[f64],
    centroids: &mut [f64],
    k: usize,
    dim: usize,
) {
    let mut sums = vec![0.0f64; k * dim];
    let mut sizes = vec![0usize; k];
    for (row, &c) in data.rows().zip(assignments) {
        sizes[c] += 1;
        for (acc, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row) {
            *acc += x.widen();
        }
    }

    // Rows ordered from farthest to nearest to their own centroid, used to
    // re-seed clusters that came out empty.
    let mut farthest: Vec<usize> = (0..data.count()).collect();
    farthest.sort_by(|&a, &b| sims[a].total_cmp(&sims[b]).then(a.cmp(&b)));
    let mut farthest = farthest.into_iter();

    for c in 0..k {
        let sum = &mut sums[c * dim..(c + 1) * dim];
        let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
        let target = &mut centroids[c * dim..(c + 1) * dim];
        if sizes[c] > 0 && norm > 0.0 {
            for (t, s) in target.iter_mut().zip(sum.iter()) {
                *t = s / norm;
            }
        } else if let Some(row) = farthest.next() {
            let row = data.row(row);
            let norm = row.iter().map(|x| x.widen() * x.widen()).sum::<f64>().sqrt();
            for (t, x) in target.iter_mut().zip(row) {
                *t = x.widen() / norm;
            }
        }
    }
}
