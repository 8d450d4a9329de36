//! Masked panel types shared by every estimator.
//!
//! Unobserved cells of a [`MaskedMatrix`] hold `NaN` so that any code path
//! that reads them by mistake poisons its output instead of silently
//! producing a plausible number. All arithmetic must branch on the mask.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value stored in unobserved cells.
pub const MASKED: f64 = f64::NAN;

/// Coordinate of a single cell, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryIndex {
    pub row: usize,
    pub col: usize,
}

impl EntryIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub const fn transposed(self) -> Self {
        Self {
            row: self.col,
            col: self.row,
        }
    }
}

/// Orientation of a dissimilarity: between rows or between columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Col,
}

/// Read access to a partially observed grid of entries.
pub trait Panel {
    type Entry: ?Sized;

    fn shape(&self) -> (usize, usize);

    /// `None` when the cell is unobserved.
    fn entry(&self, row: usize, col: usize) -> Option<&Self::Entry>;

    fn is_observed(&self, row: usize, col: usize) -> bool {
        self.entry(row, col).is_some()
    }

    fn check_index(&self, idx: EntryIndex) -> Result<()> {
        let (n_rows, n_cols) = self.shape();
        if idx.row < n_rows && idx.col < n_cols {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                row: idx.row,
                col: idx.col,
                n_rows,
                n_cols,
            })
        }
    }
}

/// N×T real matrix with an observation mask.
#[derive(Debug, Clone)]
pub struct MaskedMatrix {
    values: Array2<f64>,
    mask: Array2<bool>,
    n_observed: usize,
}

impl MaskedMatrix {
    /// Validates shapes and normalizes masked cells to [`MASKED`].
    pub fn new(mut values: Array2<f64>, mask: Array2<bool>) -> Result<Self> {
        if values.dim() != mask.dim() {
            return Err(Error::DimensionMismatch {
                expected: values.dim(),
                found: mask.dim(),
            });
        }
        let (n_rows, n_cols) = values.dim();
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::AllMissing);
        }
        let mut n_observed = 0;
        for ((idx, v), &seen) in values.indexed_iter_mut().zip(mask.iter()) {
            if seen {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "observed value at {idx:?} is not finite"
                    )));
                }
                n_observed += 1;
            } else {
                *v = MASKED;
            }
        }
        if n_observed == 0 {
            return Err(Error::AllMissing);
        }
        Ok(Self {
            values,
            mask,
            n_observed,
        })
    }

    /// Fully observed matrix.
    pub fn dense(values: Array2<f64>) -> Result<Self> {
        let mask = Array2::from_elem(values.dim(), true);
        Self::new(values, mask)
    }

    /// Row-major construction from flat buffers.
    pub fn from_vecs(n_rows: usize, n_cols: usize, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != n_rows * n_cols || mask.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: (n_rows, n_cols),
                found: (values.len(), mask.len()),
            });
        }
        let values =
            Array2::from_shape_vec((n_rows, n_cols), values).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mask =
            Array2::from_shape_vec((n_rows, n_cols), mask).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new(values, mask)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if self.mask[[row, col]] {
            Some(self.values[[row, col]])
        } else {
            None
        }
    }

    /// Values including the `NaN` sentinel in masked cells.
    pub fn raw_values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    /// Observed cells in row-major order.
    pub fn observed_entries(&self) -> Vec<EntryIndex> {
        self.mask
            .indexed_iter()
            .filter(|(_, &seen)| seen)
            .map(|((row, col), _)| EntryIndex::new(row, col))
            .collect()
    }

    /// `(min, max)` over observed values.
    pub fn observed_range(&self) -> (f64, f64) {
        self.observed_values()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn observed_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &seen)| seen)
            .map(|(&v, _)| v)
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.t().to_owned(),
            mask: self.mask.t().to_owned(),
            n_observed: self.n_observed,
        }
    }

    /// Copy with the given cells masked out.
    pub fn hide(&self, entries: &[EntryIndex]) -> Result<Self> {
        let mut mask = self.mask.clone();
        for &idx in entries {
            self.check_index(idx)?;
            mask[[idx.row, idx.col]] = false;
        }
        Self::new(self.values.clone(), mask)
    }
}

impl PartialEq for MaskedMatrix {
    /// Equal when masks agree and observed values agree bit-for-bit.
    fn eq(&self, other: &Self) -> bool {
        self.mask == other.mask
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .zip(self.mask.iter())
                .all(|((a, b), &seen)| !seen || a.to_bits() == b.to_bits())
    }
}

impl Panel for MaskedMatrix {
    type Entry = f64;

    fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    fn entry(&self, row: usize, col: usize) -> Option<&f64> {
        if self.mask[[row, col]] {
            Some(&self.values[[row, col]])
        } else {
            None
        }
    }
}

/// N×T grid whose observed cells each hold a sample of real measurements.
///
/// Samples are stored sorted ascending; order carries no meaning for an
/// empirical measure and the Wasserstein routines need it. Per-cell counts
/// may differ.
#[derive(Debug, Clone, PartialEq)]
pub struct DistMatrix {
    n_rows: usize,
    n_cols: usize,
    samples: Vec<Vec<f64>>,
    mask: Array2<bool>,
    n_observed: usize,
}

impl DistMatrix {
    /// Minimum samples per observed cell.
    pub const MIN_SAMPLES: usize = 2;

    /// `samples` is row-major with one slot per cell; `None` marks an
    /// unobserved cell.
    pub fn new(n_rows: usize, n_cols: usize, samples: Vec<Option<Vec<f64>>>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::AllMissing);
        }
        if samples.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: (n_rows, n_cols),
                found: (samples.len(), 1),
            });
        }
        let mut mask = Array2::from_elem((n_rows, n_cols), false);
        let mut stored = Vec::with_capacity(samples.len());
        let mut n_observed = 0;
        for (k, cell) in samples.into_iter().enumerate() {
            match cell {
                Some(mut xs) => {
                    if xs.len() < Self::MIN_SAMPLES {
                        return Err(Error::TooFewSamples {
                            needed: Self::MIN_SAMPLES,
                            found: xs.len(),
                        });
                    }
                    if xs.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "non-finite sample in cell {:?}",
                            (k / n_cols, k % n_cols)
                        )));
                    }
                    xs.sort_by(f64::total_cmp);
                    mask[[k / n_cols, k % n_cols]] = true;
                    n_observed += 1;
                    stored.push(xs);
                }
                None => stored.push(Vec::new()),
            }
        }
        if n_observed == 0 {
            return Err(Error::AllMissing);
        }
        Ok(Self {
            n_rows,
            n_cols,
            samples: stored,
            mask,
            n_observed,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    /// Sorted samples of an observed cell.
    pub fn get(&self, row: usize, col: usize) -> Option<&[f64]> {
        if self.mask[[row, col]] {
            Some(&self.samples[row * self.n_cols + col])
        } else {
            None
        }
    }

    pub fn observed_entries(&self) -> Vec<EntryIndex> {
        self.mask
            .indexed_iter()
            .filter(|(_, &seen)| seen)
            .map(|((row, col), _)| EntryIndex::new(row, col))
            .collect()
    }

    /// All observed samples concatenated in row-major cell order.
    pub fn pooled_samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().flatten().copied()
    }

    pub fn transpose(&self) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len());
        for col in 0..self.n_cols {
            for row in 0..self.n_rows {
                samples.push(self.samples[row * self.n_cols + col].clone());
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            samples,
            mask: self.mask.t().to_owned(),
            n_observed: self.n_observed,
        }
    }

    /// Copy with the given cells masked out.
    pub fn hide(&self, entries: &[EntryIndex]) -> Result<Self> {
        let mut out = self.clone();
        for &idx in entries {
            self.check_index(idx)?;
            if out.mask[[idx.row, idx.col]] {
                out.mask[[idx.row, idx.col]] = false;
                out.samples[idx.row * self.n_cols + idx.col] = Vec::new();
                out.n_observed -= 1;
            }
        }
        if out.n_observed == 0 {
            return Err(Error::AllMissing);
        }
        Ok(out)
    }

    /// Per-cell sample means as a scalar matrix.
    pub fn means(&self) -> MaskedMatrix {
        let mut values = Array2::from_elem((self.n_rows, self.n_cols), MASKED);
        for ((row, col), &seen) in self.mask.indexed_iter() {
            if seen {
                let xs = &self.samples[row * self.n_cols + col];
                values[[row, col]] = xs.iter().sum::<f64>() / xs.len() as f64;
            }
        }
        MaskedMatrix::new(values, self.mask.clone()).expect("at least one observed cell")
    }
}

impl Panel for DistMatrix {
    type Entry = [f64];

    fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    fn entry(&self, row: usize, col: usize) -> Option<&[f64]> {
        self.get(row, col)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn fully_observed_2x2() {
        let m = MaskedMatrix::dense(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.n_observed(), 4);
        assert_eq!(m.get(1, 0), Some(3.0));
    }

    #[test]
    fn all_zero_mask_is_rejected() {
        let err = MaskedMatrix::new(array![[1.0, 2.0], [3.0, 4.0]], Array2::from_elem((2, 2), false));
        assert!(matches!(err, Err(Error::AllMissing)));
    }

    #[test]
    fn mismatched_mask_shape() {
        let err = MaskedMatrix::new(Array2::zeros((2, 3)), Array2::from_elem((3, 2), true));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn masked_cells_hold_sentinel() {
        let m = MaskedMatrix::new(array![[1.0, 2.0]], array![[true, false]]).unwrap();
        assert!(m.raw_values()[[0, 1]].is_nan());
        assert_eq!(m.get(0, 1), None);
    }

    #[test]
    fn transpose_1x1_and_2x3() {
        let one = MaskedMatrix::dense(array![[5.0]]).unwrap();
        assert_eq!(one.transpose(), one);

        let m = MaskedMatrix::new(
            array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]],
            array![[true, false, true], [true, true, false]],
        )
        .unwrap();
        let t = m.transpose();
        assert_eq!((t.n_rows(), t.n_cols()), (3, 2));
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), t.get(j, i));
            }
        }
    }

    #[test]
    fn hide_everything_fails() {
        let m = MaskedMatrix::dense(array![[1.0, 2.0]]).unwrap();
        let all = m.observed_entries();
        assert!(matches!(m.hide(&all), Err(Error::AllMissing)));
    }

    #[test]
    fn dist_matrix_requires_two_samples() {
        let err = DistMatrix::new(1, 1, vec![Some(vec![1.0])]);
        assert!(matches!(err, Err(Error::TooFewSamples { .. })));
        let ok = DistMatrix::new(1, 2, vec![Some(vec![3.0, 1.0]), None]).unwrap();
        assert_eq!(ok.get(0, 0), Some(&[1.0, 3.0][..]));
        assert_eq!(ok.get(0, 1), None);
    }

    fn arb_matrix() -> impl Strategy<Value = MaskedMatrix> {
        (1usize..8, 1usize..8).prop_flat_map(|(n, t)| {
            (
                proptest::collection::vec(-10.0f64..10.0, n * t),
                proptest::collection::vec(any::<bool>(), n * t),
            )
                .prop_map(move |(vals, mut mask)| {
                    mask[0] = true;
                    MaskedMatrix::from_vecs(n, t, vals, mask).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn transpose_is_an_involution(m in arb_matrix()) {
            let t = m.transpose();
            prop_assert_eq!(t.n_observed(), m.n_observed());
            let back = t.transpose();
            prop_assert_eq!(back.mask(), m.mask());
            for (a, b) in back.raw_values().iter().zip(m.raw_values().iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
