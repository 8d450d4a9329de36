//! The two building blocks every nearest-neighbor variant is assembled from:
//! a *distance* step that averages an entry metric over the overlap of two
//! rows (or columns), and an *average* step that solves a weighted
//! barycenter problem over observed cells.

pub mod measure;
pub mod metric;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::matrix::{Axis, MaskedMatrix, Panel};

pub use measure::{mmd_barycenter, w2_barycenter, EmpiricalMeasure};
pub use metric::{
    gaussian_kernel, mmd2_ustat, sq_diff, w2sq_hat, DistMetric, EntryDistance, GaussianKernel, Mmd2, SquaredDifference,
    W2Squared,
};

/// Cell at position `pos` of row (or column) `unit`.
fn cell<P: Panel + ?Sized>(panel: &P, axis: Axis, unit: usize, pos: usize) -> Option<&P::Entry> {
    match axis {
        Axis::Row => panel.entry(unit, pos),
        Axis::Col => panel.entry(pos, unit),
    }
}

/// `(number of units, number of positions)` along `axis`.
fn extent<P: Panel + ?Sized>(panel: &P, axis: Axis) -> (usize, usize) {
    let (n_rows, n_cols) = panel.shape();
    match axis {
        Axis::Row => (n_rows, n_cols),
        Axis::Col => (n_cols, n_rows),
    }
}

/// Mean entry metric between rows (or columns) `a` and `b` over the
/// positions where both are observed, skipping position `exclude`.
///
/// Returns `None` when the two share no observed position.
pub fn dissimilarity<P, M>(panel: &P, metric: &M, axis: Axis, a: usize, b: usize, exclude: usize) -> Option<f64>
where
    P: Panel + ?Sized,
    M: EntryDistance<P::Entry> + ?Sized,
{
    let (_, n_pos) = extent(panel, axis);
    let mut sum = 0.0;
    let mut count = 0u32;
    for pos in (0..n_pos).filter(|&p| p != exclude) {
        if let (Some(x), Some(y)) = (cell(panel, axis, a, pos), cell(panel, axis, b, pos)) {
            sum += metric.distance(x, y);
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Dissimilarities from one row (or column) to every other one.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityProfile {
    pub axis: Axis,
    pub target: usize,
    pub exclude: usize,
    /// Every other index, ascending.
    pub candidates: Vec<usize>,
    /// `+inf` where undefined.
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
}

impl DissimilarityProfile {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Dissimilarity to `index`, `None` if undefined or `index == target`.
    pub fn get(&self, index: usize) -> Option<f64> {
        let k = self.candidates.binary_search(&index).ok()?;
        self.defined[k].then_some(self.values[k])
    }

    pub fn defined_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.defined)
            .filter(|(_, &d)| d)
            .map(|(&v, _)| v)
    }

    /// Defined `(value, index)` pairs ordered by value, ties by index.
    pub fn sorted_defined(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = self
            .candidates
            .iter()
            .zip(&self.values)
            .zip(&self.defined)
            .filter(|(_, &d)| d)
            .map(|((&j, &v), _)| (v, j))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }
}

/// Applies [`dissimilarity`] from `target` to every other row (or column).
pub fn dissimilarity_profile<P, M>(
    panel: &P,
    metric: &M,
    axis: Axis,
    target: usize,
    exclude: usize,
) -> DissimilarityProfile
where
    P: Panel + ?Sized,
    M: EntryDistance<P::Entry> + ?Sized,
{
    let (n_units, _) = extent(panel, axis);
    let candidates: Vec<usize> = (0..n_units).filter(|&j| j != target).collect();
    let mut values = Vec::with_capacity(candidates.len());
    let mut defined = Vec::with_capacity(candidates.len());
    for &j in &candidates {
        match dissimilarity(panel, metric, axis, target, j, exclude) {
            Some(v) => {
                values.push(v);
                defined.push(true);
            }
            None => {
                values.push(f64::INFINITY);
                defined.push(false);
            }
        }
    }
    DissimilarityProfile {
        axis,
        target,
        exclude,
        candidates,
        values,
        defined,
    }
}

/// Pairwise metric sums and overlap counts over *all* positions, so that a
/// profile excluding one position costs O(units) instead of
/// O(units × positions).
///
/// Profiles drawn from the table are bitwise identical to
/// [`dissimilarity_profile`]: pairs whose sums include the excluded position
/// are recomputed directly rather than corrected by subtraction.
#[derive(Debug, Clone)]
pub struct PairwiseTable {
    axis: Axis,
    n_units: usize,
    n_pos: usize,
    sums: Vec<f64>,
    counts: Vec<u32>,
}

impl PairwiseTable {
    /// `pair(a, b, pos)` must return the entry metric between cells
    /// `(a, pos)` and `(b, pos)` (oriented along `axis`) and is only called
    /// where both are observed.
    pub fn build<P, F>(panel: &P, axis: Axis, pair: F) -> Self
    where
        P: Panel + ?Sized,
        F: Fn(usize, usize, usize) -> f64,
    {
        let (n_units, n_pos) = extent(panel, axis);
        let observed = observed_by_unit(panel, axis);
        let mut sums = vec![0.0; n_units * n_units];
        let mut counts = vec![0u32; n_units * n_units];
        for a in 0..n_units {
            let oa = &observed[a * n_pos..(a + 1) * n_pos];
            for b in a + 1..n_units {
                let ob = &observed[b * n_pos..(b + 1) * n_pos];
                let mut sum = 0.0;
                let mut count = 0u32;
                for pos in 0..n_pos {
                    if oa[pos] && ob[pos] {
                        sum += pair(a, b, pos);
                        count += 1;
                    }
                }
                sums[a * n_units + b] = sum;
                sums[b * n_units + a] = sum;
                counts[a * n_units + b] = count;
                counts[b * n_units + a] = count;
            }
        }
        Self {
            axis,
            n_units,
            n_pos,
            sums,
            counts,
        }
    }

    /// Table for a panel and an [`EntryDistance`].
    pub fn from_metric<P, M>(panel: &P, metric: &M, axis: Axis) -> Self
    where
        P: Panel + ?Sized,
        M: EntryDistance<P::Entry> + ?Sized,
    {
        Self::build(panel, axis, |a, b, pos| {
            let x = cell(panel, axis, a, pos).expect("observed");
            let y = cell(panel, axis, b, pos).expect("observed");
            metric.distance(x, y)
        })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Profile of `target` excluding position `exclude`. `panel` and `pair`
    /// must be the ones the table was built from.
    pub fn profile<P, F>(&self, panel: &P, pair: F, target: usize, exclude: usize) -> DissimilarityProfile
    where
        P: Panel + ?Sized,
        F: Fn(usize, usize, usize) -> f64,
    {
        let axis = self.axis;
        let target_at_exclude = cell(panel, axis, target, exclude).is_some();
        let candidates: Vec<usize> = (0..self.n_units).filter(|&j| j != target).collect();
        let mut values = Vec::with_capacity(candidates.len());
        let mut defined = Vec::with_capacity(candidates.len());
        for &j in &candidates {
            let (sum, count) = if target_at_exclude && cell(panel, axis, j, exclude).is_some() {
                // the stored sum contains the excluded term; recompute in order
                let (a, b) = (target.min(j), target.max(j));
                let mut sum = 0.0;
                let mut count = 0u32;
                for pos in (0..self.n_pos).filter(|&p| p != exclude) {
                    if cell(panel, axis, a, pos).is_some() && cell(panel, axis, b, pos).is_some() {
                        sum += pair(a, b, pos);
                        count += 1;
                    }
                }
                (sum, count)
            } else {
                let k = target * self.n_units + j;
                (self.sums[k], self.counts[k])
            };
            if count > 0 {
                values.push(sum / count as f64);
                defined.push(true);
            } else {
                values.push(f64::INFINITY);
                defined.push(false);
            }
        }
        DissimilarityProfile {
            axis,
            target,
            exclude,
            candidates,
            values,
            defined,
        }
    }

    /// [`Self::profile`] for a table built with [`Self::from_metric`].
    pub fn profile_with_metric<P, M>(
        &self,
        panel: &P,
        metric: &M,
        target: usize,
        exclude: usize,
    ) -> DissimilarityProfile
    where
        P: Panel + ?Sized,
        M: EntryDistance<P::Entry> + ?Sized,
    {
        let axis = self.axis;
        self.profile(
            panel,
            |a, b, pos| {
                let x = cell(panel, axis, a, pos).expect("observed");
                let y = cell(panel, axis, b, pos).expect("observed");
                metric.distance(x, y)
            },
            target,
            exclude,
        )
    }
}

fn observed_by_unit<P: Panel + ?Sized>(panel: &P, axis: Axis) -> Vec<bool> {
    let (n_units, n_pos) = extent(panel, axis);
    let mut out = Vec::with_capacity(n_units * n_pos);
    for u in 0..n_units {
        for p in 0..n_pos {
            out.push(cell(panel, axis, u, p).is_some());
        }
    }
    out
}

/// Minimizer of `sum w_{j,s} A_{j,s} (x - Z_{j,s})^2`: the mask-weighted
/// mean. Unobserved cells are never read.
pub fn weighted_scalar_average(weights: &Array2<f64>, m: &MaskedMatrix) -> Result<f64> {
    if weights.dim() != m.shape() {
        return Err(Error::DimensionMismatch {
            expected: m.shape(),
            found: weights.dim(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((idx, &w), &seen) in weights.indexed_iter().zip(m.mask().iter()) {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "weight at {idx:?} is negative or not finite"
            )));
        }
        if seen && w > 0.0 {
            num += w * m.raw_values()[idx];
            den += w;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::ZeroTotalWeight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, t: usize, p: f64) -> MaskedMatrix {
        let vals: Vec<f64> = (0..n * t).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut mask: Vec<bool> = (0..n * t).map(|_| rng.random_bool(p)).collect();
        mask[0] = true;
        MaskedMatrix::from_vecs(n, t, vals, mask).unwrap()
    }

    #[test]
    fn identical_overlap_gives_zero() {
        let m = MaskedMatrix::new(
            array![[1.0, 2.0, 0.0], [1.0, 2.0, 0.0]],
            array![[true, true, false], [true, true, false]],
        )
        .unwrap();
        assert_eq!(dissimilarity(&m, &SquaredDifference, Axis::Row, 0, 1, 2), Some(0.0));
    }

    #[test]
    fn hand_evaluated_row_distance() {
        let m = MaskedMatrix::dense(array![[0.0, 0.0, 9.0], [1.0, 3.0, 9.0]]).unwrap();
        assert_eq!(dissimilarity(&m, &SquaredDifference, Axis::Row, 0, 1, 2), Some(5.0));
    }

    #[test]
    fn disjoint_rows_are_undefined() {
        let m = MaskedMatrix::new(array![[1.0, 0.0], [0.0, 2.0]], array![[true, false], [false, true]]).unwrap();
        assert_eq!(dissimilarity(&m, &SquaredDifference, Axis::Row, 0, 1, 5), None);
        let p = dissimilarity_profile(&m, &SquaredDifference, Axis::Row, 0, 5);
        assert_eq!(p.len(), 1);
        assert!(!p.defined[0]);
        assert_eq!(p.values[0], f64::INFINITY);
    }

    #[test]
    fn profile_has_zeros_for_identical_rows() {
        let m = MaskedMatrix::dense(array![
            [1.0, 2.0, 3.0],
            [1.0, 2.0, 3.0],
            [5.0, 2.0, 1.0],
            [1.0, 2.0, 3.0]
        ])
        .unwrap();
        let p = dissimilarity_profile(&m, &SquaredDifference, Axis::Row, 0, 1);
        assert_eq!(p.candidates, vec![1, 2, 3]);
        assert_eq!(p.get(1), Some(0.0));
        assert_eq!(p.get(3), Some(0.0));
        assert!(p.get(2).unwrap() > 0.0);
    }

    #[test]
    fn profile_matches_pointwise_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 8, 8, 0.6);
            for axis in [Axis::Row, Axis::Col] {
                let (target, exclude) = (rng.random_range(0..8), rng.random_range(0..8));
                let p = dissimilarity_profile(&m, &SquaredDifference, axis, target, exclude);
                for (k, &j) in p.candidates.iter().enumerate() {
                    let direct = dissimilarity(&m, &SquaredDifference, axis, target, j, exclude);
                    assert_eq!(direct.unwrap_or(f64::INFINITY).to_bits(), p.values[k].to_bits());
                    assert_eq!(direct.is_some(), p.defined[k]);
                }
            }
        }
    }

    #[test]
    fn table_profiles_are_bitwise_direct_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 9, 7, 0.55);
            for axis in [Axis::Row, Axis::Col] {
                let table = PairwiseTable::from_metric(&m, &SquaredDifference, axis);
                let (n_units, n_pos) = if axis == Axis::Row { (9, 7) } else { (7, 9) };
                for target in 0..n_units {
                    for exclude in 0..n_pos {
                        let direct = dissimilarity_profile(&m, &SquaredDifference, axis, target, exclude);
                        let cached = table.profile_with_metric(&m, &SquaredDifference, target, exclude);
                        assert_eq!(direct.defined, cached.defined);
                        for (a, b) in direct.values.iter().zip(&cached.values) {
                            assert_eq!(a.to_bits(), b.to_bits());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn scaling_values_scales_dissimilarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 6, 6, 0.8);
        let scaled = MaskedMatrix::new(m.raw_values().mapv(|v| 4.0 * v), m.mask().clone()).unwrap();
        let p = dissimilarity_profile(&m, &SquaredDifference, Axis::Row, 0, 1);
        let q = dissimilarity_profile(&scaled, &SquaredDifference, Axis::Row, 0, 1);
        for (a, b) in p.defined_values().zip(q.defined_values()) {
            assert_eq!(16.0 * a, b);
        }
        let order_p: Vec<usize> = p.sorted_defined().into_iter().map(|x| x.1).collect();
        let order_q: Vec<usize> = q.sorted_defined().into_iter().map(|x| x.1).collect();
        assert_eq!(order_p, order_q);
    }

    #[test]
    fn average_examples() {
        let m = MaskedMatrix::new(array![[2.0, 7.0], [4.0, 1.0]], array![[true, false], [true, true]]).unwrap();
        let mut w = Array2::zeros((2, 2));
        w[[1, 1]] = 3.0;
        assert_eq!(weighted_scalar_average(&w, &m).unwrap(), 1.0);
        let w = array![[1.0, 0.0], [1.0, 0.0]];
        assert_eq!(weighted_scalar_average(&w, &m).unwrap(), 3.0);
        // weight on an unobserved cell only
        let w = array![[0.0, 1.0], [0.0, 0.0]];
        assert!(matches!(weighted_scalar_average(&w, &m), Err(Error::ZeroTotalWeight)));
    }

    #[test]
    fn average_matches_grid_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let m = random_matrix(&mut rng, 4, 5, 0.7);
            let w = Array2::from_shape_fn((4, 5), |_| rng.random_range(0.0..1.0));
            let got = weighted_scalar_average(&w, &m).unwrap();
            let loss = |x: f64| -> f64 {
                let mut s = 0.0;
                for ((idx, &wv), &seen) in w.indexed_iter().zip(m.mask().iter()) {
                    if seen {
                        s += wv * (x - m.raw_values()[idx]).powi(2);
                    }
                }
                s
            };
            // coarse grid, then successive refinement around the best point
            let (mut lo, mut hi) = (-2.0, 2.0);
            for _ in 0..12 {
                let step = (hi - lo) / 200.0;
                let best = (0..=200)
                    .map(|k| lo + step * k as f64)
                    .min_by(|a, b| loss(*a).total_cmp(&loss(*b)))
                    .unwrap();
                lo = best - step;
                hi = best + step;
            }
            assert_relative_eq!(got, 0.5 * (lo + hi), epsilon = 1e-6);
        }
    }
}
