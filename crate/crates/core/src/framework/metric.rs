//! Entry-wise dissimilarities between two observed cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A data-dependent dissimilarity between two observed cells.
pub trait EntryDistance<E: ?Sized> {
    fn distance(&self, x: &E, y: &E) -> f64;
}

/// `(x - y)^2`.
pub fn sq_diff(x: f64, y: f64) -> f64 {
    let d = x - y;
    d * d
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquaredDifference;

impl EntryDistance<f64> for SquaredDifference {
    fn distance(&self, x: &f64, y: &f64) -> f64 {
        sq_diff(*x, *y)
    }
}

/// Gaussian kernel `exp(-(x-y)^2 / (2h^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    bandwidth: f64,
    // -1 / (2h^2), cached
    scale: f64,
}

impl GaussianKernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::NonPositiveBandwidth(bandwidth));
        }
        Ok(Self {
            bandwidth,
            scale: -1.0 / (2.0 * bandwidth * bandwidth),
        })
    }

    /// Median of pairwise absolute differences in `pooled`, or 1.0 when that
    /// median is zero. Large pools are thinned to an evenly spaced subset of
    /// their order statistics first.
    pub fn median_heuristic(pooled: &[f64]) -> Self {
        const MAX_POINTS: usize = 1000;
        let mut sorted: Vec<f64> = pooled.iter().copied().filter(|x| x.is_finite()).collect();
        sorted.sort_by(f64::total_cmp);
        let points: Vec<f64> = if sorted.len() > MAX_POINTS {
            let stride = sorted.len() as f64 / MAX_POINTS as f64;
            (0..MAX_POINTS)
                .map(|k| sorted[((k as f64 + 0.5) * stride) as usize])
                .collect()
        } else {
            sorted
        };
        let mut diffs = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
        for (k, &x) in points.iter().enumerate() {
            for &y in &points[k + 1..] {
                diffs.push((x - y).abs());
            }
        }
        let median = if diffs.is_empty() {
            0.0
        } else {
            let mid = diffs.len() / 2;
            *diffs.select_nth_unstable_by(mid, f64::total_cmp).1
        };
        let h = if median > 0.0 { median } else { 1.0 };
        Self::new(h).expect("bandwidth is positive")
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        (d * d * self.scale).exp()
    }

    /// `sum_{i != j} k(a_i, a_j)`.
    pub fn self_sum(&self, a: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, &x) in a.iter().enumerate() {
            for &y in &a[i + 1..] {
                s += self.eval(x, y);
            }
        }
        2.0 * s
    }

    /// `sum_{i, j} k(a_i, b_j)`.
    pub fn cross_sum(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for &x in a {
            for &y in b {
                s += self.eval(x, y);
            }
        }
        s
    }
}

/// Checked Gaussian kernel evaluation.
pub fn gaussian_kernel(x: f64, y: f64, bandwidth: f64) -> Result<f64> {
    Ok(GaussianKernel::new(bandwidth)?.eval(x, y))
}

/// Combines precomputed kernel sums into the unbiased MMD² estimate.
pub(crate) fn mmd2_from_sums(self_a: f64, n_a: usize, self_b: f64, n_b: usize, cross: f64) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    self_a / (na * (na - 1.0)) + self_b / (nb * (nb - 1.0)) - 2.0 * cross / (na * nb)
}

/// Unbiased U-statistic estimate of the squared MMD between two samples.
/// May be negative.
pub fn mmd2_ustat(a: &[f64], b: &[f64], kernel: &GaussianKernel) -> Result<f64> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                found: s.len(),
            });
        }
    }
    Ok(mmd2_unchecked(a, b, kernel))
}

fn mmd2_unchecked(a: &[f64], b: &[f64], kernel: &GaussianKernel) -> f64 {
    // canonical argument order keeps the cross sum bitwise symmetric
    let (a, b) = if slice_cmp(a, b).is_gt() { (b, a) } else { (a, b) };
    let saa = kernel.self_sum(a);
    let sbb = kernel.self_sum(b);
    let sab = kernel.cross_sum(a, b);
    mmd2_from_sums(saa, a.len(), sbb, b.len(), sab)
}

/// Same value as [`mmd2_ustat`], reusing precomputed [`GaussianKernel::self_sum`]s.
pub(crate) fn mmd2_with_self_sums(a: &[f64], self_a: f64, b: &[f64], self_b: f64, kernel: &GaussianKernel) -> f64 {
    let ((a, saa), (b, sbb)) = if slice_cmp(a, b).is_gt() {
        ((b, self_b), (a, self_a))
    } else {
        ((a, self_a), (b, self_b))
    };
    mmd2_from_sums(saa, a.len(), sbb, b.len(), kernel.cross_sum(a, b))
}

fn slice_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Empirical quantile index for grid point `k` (0-based) of `g` points on a
/// sorted sample of size `n`: `Q((k + 1/2) / g) = x_(ceil(n (k + 1/2) / g))`.
pub(crate) fn grid_quantile_index(k: usize, g: usize, n: usize) -> usize {
    // exact integer arithmetic
    ((2 * k + 1) * n).div_ceil(2 * g) - 1
}

/// Squared 2-Wasserstein distance between sorted samples.
pub(crate) fn w2sq_sorted(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(b).map(|(x, y)| sq_diff(*x, *y)).sum();
        return s / a.len() as f64;
    }
    let g = a.len().max(b.len());
    let mut s = 0.0;
    for k in 0..g {
        let qa = a[grid_quantile_index(k, g, a.len())];
        let qb = b[grid_quantile_index(k, g, b.len())];
        s += sq_diff(qa, qb);
    }
    s / g as f64
}

/// Quantile-based estimate of the squared 2-Wasserstein distance between
/// two empirical measures on the real line.
pub fn w2sq_hat(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(w2sq_sorted(&a, &b))
}

/// Squared MMD with a Gaussian kernel, for cells of a distributional panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mmd2(pub GaussianKernel);

impl EntryDistance<[f64]> for Mmd2 {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        mmd2_unchecked(x, y, &self.0)
    }
}

/// Squared 2-Wasserstein distance; cells must hold sorted samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct W2Squared;

impl EntryDistance<[f64]> for W2Squared {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        w2sq_sorted(x, y)
    }
}

/// Distributional metric choice, as configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistMetric {
    Mmd2(GaussianKernel),
    W2Squared,
}

impl EntryDistance<[f64]> for DistMetric {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            DistMetric::Mmd2(k) => mmd2_unchecked(x, y, k),
            DistMetric::W2Squared => w2sq_sorted(x, y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn squared_difference_examples() {
        assert_eq!(sq_diff(3.0, 1.0), 4.0);
        assert_eq!(sq_diff(2.5, 2.5), 0.0);
        assert_eq!(sq_diff(-2.0, 1.0), 9.0);
    }

    #[test]
    fn kernel_values() {
        assert_eq!(gaussian_kernel(1.3, 1.3, 0.2).unwrap(), 1.0);
        assert_relative_eq!(
            gaussian_kernel(0.0, 1.0, 1.0).unwrap(),
            (-0.5f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(gaussian_kernel(0.0, 1.0, 1.0).unwrap(), 0.60653, epsilon = 1e-5);
        assert!(matches!(
            gaussian_kernel(0.0, 1.0, 0.0),
            Err(Error::NonPositiveBandwidth(_))
        ));
        assert!(matches!(
            gaussian_kernel(0.0, 1.0, -1.0),
            Err(Error::NonPositiveBandwidth(_))
        ));
    }

    #[test]
    fn mmd_examples() {
        let k = GaussianKernel::new(1.0).unwrap();
        assert_eq!(mmd2_ustat(&[0.0, 0.0], &[0.0, 0.0], &k).unwrap(), 0.0);
        let v = mmd2_ustat(&[0.0, 0.0], &[1.0, 1.0], &k).unwrap();
        assert_relative_eq!(v, 2.0 - 2.0 * (-0.5f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(v, 0.78694, epsilon = 1e-5);
        assert!(matches!(
            mmd2_ustat(&[0.0], &[1.0, 2.0], &k),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn w2_examples() {
        assert_eq!(w2sq_hat(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 1.0);
        assert_eq!(w2sq_hat(&[3.0, 1.0], &[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(w2sq_hat(&[0.0], &[5.0]).unwrap(), 25.0);
        assert!(matches!(w2sq_hat(&[], &[5.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn w2_unequal_sizes_uses_common_grid() {
        // G = 3, u = 1/6, 1/2, 5/6; Q_a = 0, 0, 1 (n = 2); Q_b = 0, 1, 2.
        let v = w2sq_hat(&[0.0, 1.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_relative_eq!(v, (0.0 + 1.0 + 1.0) / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn grid_index_matches_float_definition() {
        for n in 1..12 {
            for g in n..15 {
                for k in 0..g {
                    let u = (k as f64 + 0.5) / g as f64;
                    let expect = ((u * n as f64).ceil() as usize).max(1) - 1;
                    assert_eq!(grid_quantile_index(k, g, n), expect, "k={k} g={g} n={n}");
                }
            }
        }
    }

    #[test]
    fn median_heuristic_fallback() {
        assert_eq!(GaussianKernel::median_heuristic(&[2.0, 2.0, 2.0]).bandwidth(), 1.0);
        assert_eq!(GaussianKernel::median_heuristic(&[0.0, 1.0, 3.0]).bandwidth(), 2.0);
    }

    proptest! {
        #[test]
        fn metrics_are_symmetric(
            a in proptest::collection::vec(-5.0f64..5.0, 2..20),
            b in proptest::collection::vec(-5.0f64..5.0, 2..20),
            h in 0.1f64..3.0,
        ) {
            let k = GaussianKernel::new(h).unwrap();
            prop_assert_eq!(k.eval(a[0], b[0]), k.eval(b[0], a[0]));
            let ab = mmd2_ustat(&a, &b, &k).unwrap();
            let ba = mmd2_ustat(&b, &a, &k).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!(ab.abs() <= 4.0);
            let wab = w2sq_hat(&a, &b).unwrap();
            prop_assert_eq!(wab, w2sq_hat(&b, &a).unwrap());
            prop_assert!(wab >= 0.0);
        }
    }
}
