//! Entry-wise imputation methods.
//!
//! Scalar thresholded variants (RowNN, ColNN, TSNN, DRNN, AutoNN) share one
//! per-target structure, [`Neighborhoods`], holding both sorted
//! dissimilarity profiles and prefix sums over them; every variant is a
//! few lookups into it. AWNN replaces thresholds with simplex-constrained
//! weights, and the distributional variants swap the entry metric and the
//! barycenter.

mod awnn;
mod dist;
mod scalar;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::DissimilarityProfile;

pub use awnn::{awnn_weights, default_reg_log_term, impute_awnn, AwnnConfig, AwnnState, WeightVector, SIGMA2_FLOOR};
pub use dist::{impute_dist_nn, DistMetricKind, DistModel};
pub use scalar::{
    impute_autonn, impute_colnn, impute_drnn, impute_rownn, impute_tsnn, Neighborhoods, ScalarMethod, ScalarModel,
    TABLE_WORK_LIMIT,
};

/// Neighborhood radius, either absolute or as a per-target percentile of the
/// defined dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    Absolute(f64),
    Percentile(f64),
}

impl Threshold {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Threshold::Absolute(v) if !(v >= 0.0) => {
                Err(Error::InvalidParameter(format!("threshold {v} is negative or NaN")))
            }
            Threshold::Percentile(q) if !(0.0..=100.0).contains(&q) => {
                Err(Error::InvalidParameter(format!("percentile {q} outside [0, 100]")))
            }
            _ => Ok(()),
        }
    }

    /// Absolute radius for a profile whose defined values are `sorted`
    /// ascending. `None` when a percentile is requested of an empty profile.
    pub fn resolve(&self, sorted: &[f64]) -> Option<f64> {
        match *self {
            Threshold::Absolute(v) => Some(v),
            Threshold::Percentile(q) => nearest_rank(sorted, q),
        }
    }
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `max(1, ceil(q/100 * n))`.
pub(crate) fn nearest_rank(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((q / 100.0) * n as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

/// Nearest-rank percentile of a profile's defined values.
pub fn profile_percentile(profile: &DissimilarityProfile, q: f64) -> Result<f64> {
    let mut vals: Vec<f64> = profile.defined_values().collect();
    vals.sort_by(f64::total_cmp);
    nearest_rank(&vals, q).ok_or(Error::NoDefinedDistances)
}

/// Hyperparameters of the scalar nearest-neighbor family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarHyperParams {
    pub eta_row: Threshold,
    pub eta_col: Threshold,
    /// AutoNN interpolation weight on DRNN.
    pub alpha: f64,
    /// AWNN coefficient on `sigma^2 ||v||^2`; `None` means `2 log(2N)`.
    pub awnn_reg: Option<f64>,
}

impl Default for ScalarHyperParams {
    fn default() -> Self {
        Self {
            eta_row: Threshold::Percentile(50.0),
            eta_col: Threshold::Percentile(50.0),
            alpha: 0.5,
            awnn_reg: None,
        }
    }
}

impl ScalarHyperParams {
    pub fn validate(&self) -> Result<()> {
        self.eta_row.validate()?;
        self.eta_col.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if let Some(r) = self.awnn_reg {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter(format!("awnn_reg must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// An imputed value together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate<V = f64> {
    pub value: V,
    /// No donor passed the threshold and the nearest observed donor was used.
    pub fallback_used: bool,
    pub neighbor_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_examples() {
        assert_eq!(nearest_rank(&[1.0, 2.0, 3.0], 0.0), Some(1.0));
        assert_eq!(nearest_rank(&[1.0, 2.0, 3.0], 100.0), Some(3.0));
        let eleven: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(nearest_rank(&eleven, 50.0), Some(5.0));
        assert_eq!(nearest_rank(&[], 50.0), None);
    }

    #[test]
    fn params_validation() {
        let mut p = ScalarHyperParams::default();
        assert!(p.validate().is_ok());
        p.alpha = 1.5;
        assert!(p.validate().is_err());
        p.alpha = 0.5;
        p.eta_row = Threshold::Percentile(101.0);
        assert!(p.validate().is_err());
    }
}
