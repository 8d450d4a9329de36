//! Distributional nearest neighbors (KernelNN and W2NN).

use serde::{Deserialize, Serialize};

use super::{Estimate, Threshold};
use crate::error::{Error, Result};
use crate::framework::metric::{mmd2_with_self_sums, w2sq_sorted};
use crate::framework::{
    dissimilarity_profile, mmd_barycenter, w2_barycenter, DissimilarityProfile, DistMetric, EmpiricalMeasure,
    GaussianKernel, PairwiseTable,
};
use crate::matrix::{Axis, DistMatrix, EntryIndex, Panel};

/// Metric family, before any data-dependent bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistMetricKind {
    Mmd2,
    W2Squared,
}

impl DistMetricKind {
    /// Concrete metric for `dm`; MMD uses the median heuristic over all
    /// observed samples.
    pub fn resolve(self, dm: &DistMatrix) -> DistMetric {
        match self {
            DistMetricKind::Mmd2 => {
                let pooled: Vec<f64> = dm.pooled_samples().collect();
                DistMetric::Mmd2(GaussianKernel::median_heuristic(&pooled))
            }
            DistMetricKind::W2Squared => DistMetric::W2Squared,
        }
    }
}

/// A distributional panel with its row table precomputed. Column-wise
/// models hold the transposed panel and transpose targets on the way in.
#[derive(Debug, Clone)]
pub struct DistModel {
    dm: DistMatrix,
    axis: Axis,
    metric: DistMetric,
    table: PairwiseTable,
    // per-cell kernel self sums, row-major over `dm`; empty for W2
    self_sums: Vec<f64>,
}

impl DistModel {
    pub fn new(dm: &DistMatrix, metric: DistMetric, axis: Axis) -> Self {
        let dm = match axis {
            Axis::Row => dm.clone(),
            Axis::Col => dm.transpose(),
        };
        let self_sums = match metric {
            DistMetric::Mmd2(k) => (0..dm.n_rows())
                .flat_map(|r| (0..dm.n_cols()).map(move |c| (r, c)))
                .map(|(r, c)| dm.get(r, c).map_or(0.0, |s| k.self_sum(s)))
                .collect(),
            DistMetric::W2Squared => Vec::new(),
        };
        let table = PairwiseTable::build(&dm, Axis::Row, |a, b, pos| pair(&dm, metric, &self_sums, a, b, pos));
        Self {
            dm,
            axis,
            metric,
            table,
            self_sums,
        }
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn metric(&self) -> DistMetric {
        self.metric
    }

    fn orient(&self, target: EntryIndex) -> EntryIndex {
        match self.axis {
            Axis::Row => target,
            Axis::Col => target.transposed(),
        }
    }

    /// Profile of the target's row (or column, for column-wise models).
    pub fn profile(&self, target: EntryIndex) -> Result<DissimilarityProfile> {
        let t = self.orient(target);
        self.dm.check_index(t)?;
        let pair = |a, b, pos| pair(&self.dm, self.metric, &self.self_sums, a, b, pos);
        Ok(self.table.profile(&self.dm, pair, t.row, t.col))
    }

    pub fn impute(&self, target: EntryIndex, eta: Threshold) -> Result<Estimate<EmpiricalMeasure>> {
        eta.validate()?;
        let profile = self.profile(target)?;
        barycenter_from_profile(&self.dm, &profile, self.orient(target), target, eta, self.metric)
    }
}

fn pair(dm: &DistMatrix, metric: DistMetric, self_sums: &[f64], a: usize, b: usize, pos: usize) -> f64 {
    let x = dm.get(a, pos).expect("observed");
    let y = dm.get(b, pos).expect("observed");
    match metric {
        DistMetric::Mmd2(k) => {
            let w = dm.n_cols();
            mmd2_with_self_sums(x, self_sums[a * w + pos], y, self_sums[b * w + pos], &k)
        }
        DistMetric::W2Squared => w2sq_sorted(x, y),
    }
}

fn barycenter_from_profile(
    dm: &DistMatrix,
    profile: &DissimilarityProfile,
    oriented: EntryIndex,
    target: EntryIndex,
    eta: Threshold,
    metric: DistMetric,
) -> Result<Estimate<EmpiricalMeasure>> {
    let sorted = profile.sorted_defined();
    let vals: Vec<f64> = sorted.iter().map(|x| x.0).collect();
    let k = eta.resolve(&vals).map_or(0, |r| vals.partition_point(|&v| v <= r));
    let col = oriented.col;
    let donors: Vec<EmpiricalMeasure> = sorted[..k]
        .iter()
        .filter_map(|&(_, j)| dm.get(j, col))
        .map(EmpiricalMeasure::uniform)
        .collect::<Result<_>>()?;
    let (donors, fallback_used) = if donors.is_empty() {
        let nearest = sorted
            .iter()
            .find_map(|&(_, j)| dm.get(j, col))
            .ok_or(Error::NoObservedDonor {
                row: target.row,
                col: target.col,
            })?;
        (vec![EmpiricalMeasure::uniform(nearest)?], true)
    } else {
        (donors, false)
    };
    let weights = vec![1.0; donors.len()];
    let value = match metric {
        DistMetric::Mmd2(_) => mmd_barycenter(&weights, &donors)?,
        DistMetric::W2Squared => w2_barycenter(&weights, &donors)?,
    };
    Ok(Estimate {
        value,
        fallback_used,
        neighbor_count: donors.len(),
    })
}

/// Distributional nearest neighbors for one target without a cached table.
/// `axis = Col` runs the column-wise variant.
pub fn impute_dist_nn(
    dm: &DistMatrix,
    target: EntryIndex,
    eta1: Threshold,
    metric: DistMetric,
    axis: Axis,
) -> Result<Estimate<EmpiricalMeasure>> {
    eta1.validate()?;
    dm.check_index(target)?;
    let owned;
    let (panel, oriented) = match axis {
        Axis::Row => (dm, target),
        Axis::Col => {
            owned = dm.transpose();
            (&owned, target.transposed())
        }
    };
    let profile = dissimilarity_profile(panel, &metric, Axis::Row, oriented.row, oriented.col);
    barycenter_from_profile(panel, &profile, oriented, target, eta1, metric)
}
