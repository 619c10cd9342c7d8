//! Floating point element types accepted by the vector index.

use std::fmt::{Debug, Display};

use num_traits::{Float, NumCast};

/// Element type of an embedding matrix.
///
/// Storage precision is free, but every similarity is accumulated in `f64`,
/// so the trait only needs lossless widening and a rounding narrow.
pub trait Scalar: Float + NumCast + Debug + Display + Default + Send + Sync + 'static {
    fn widen(self) -> f64;
    fn narrow(value: f64) -> Self;
}

impl Scalar for f32 {
    #[inline(always)]
    fn widen(self) -> f64 {
        self as f64
    }

    #[inline(always)]
    fn narrow(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn widen(self) -> f64 {
        self
    }

    #[inline(always)]
    fn narrow(value: f64) -> Self {
        value
    }
}

/// Inner product of two equal-length slices, accumulated in `f64`.
///
/// Eight independent partial sums are kept so the loop vectorizes; the
/// summation order is fixed, so results are reproducible.
#[inline]
pub fn dot<A: Scalar, B: Scalar>(a: &[A], b: &[B]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail_a = chunks_a.remainder();
    let tail_b = chunks_b.remainder();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for lane in 0..8 {
            acc[lane] += ca[lane].widen() * cb[lane].widen();
        }
    }
    let mut tail = 0.0;
    for (x, y) in tail_a.iter().zip(tail_b) {
        tail += x.widen() * y.widen();
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// L2 norm accumulated in `f64`.
#[inline]
pub fn l2_norm<S: Scalar>(v: &[S]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f32> = (0..37).map(|i| (i as f32 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| *x as f64 * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn widen_narrow() {
        assert_eq!(f32::narrow(0.5f32.widen()), 0.5);
        assert_eq!(f64::narrow(0.25), 0.25);
    }
}
