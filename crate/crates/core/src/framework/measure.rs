//! Weighted empirical measures on the real line and their barycenters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-9;
// slack when comparing a cumulative weight against a quantile level
const CDF_TOL: f64 = 1e-12;

/// Finite discrete probability measure. Atoms are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: (atoms.len(), 1),
                found: (weights.len(), 1),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(
                "measure atoms and weights must be finite, weights nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "measure weights sum to {total}, not 1"
            )));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        if !pairs.windows(2).all(|w| w[0].0 <= w[1].0) {
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let (atoms, weights) = pairs.into_iter().unzip();
        Ok(Self { atoms, weights })
    }

    /// `n^-1 sum_l delta_{x_l}`.
    pub fn uniform(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let w = 1.0 / samples.len() as f64;
        Self::new(samples.to_vec(), vec![w; samples.len()])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Right-continuous CDF `F(x) = mu((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|&a| a <= x);
        self.weights[..k].iter().sum::<f64>().min(1.0)
    }

    /// Left-continuous quantile `Q(u) = inf { x : F(x) >= u }`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut cum = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            cum += w;
            if cum >= u - CDF_TOL {
                return *a;
            }
        }
        *self.atoms.last().expect("measure is nonempty")
    }
}

fn normalized(weights: &[f64], n_measures: usize) -> Result<Vec<f64>> {
    if weights.len() != n_measures {
        return Err(Error::DimensionMismatch {
            expected: (n_measures, 1),
            found: (weights.len(), 1),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(
            "barycenter weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Weighted mixture `sum_j w_j mu_j`: every atom of every positively
/// weighted measure, scaled by that measure's normalized weight.
pub fn mmd_barycenter(weights: &[f64], measures: &[EmpiricalMeasure]) -> Result<EmpiricalMeasure> {
    let w = normalized(weights, measures.len())?;
    let mut atoms = Vec::new();
    let mut masses = Vec::new();
    for (wj, mu) in w.iter().zip(measures) {
        if *wj == 0.0 {
            continue;
        }
        atoms.extend_from_slice(&mu.atoms);
        masses.extend(mu.weights.iter().map(|m| m * wj));
    }
    EmpiricalMeasure::new(atoms, masses)
}

/// One-dimensional Wasserstein barycenter: the weighted average of quantile
/// functions, evaluated on the grid `(k - 1/2) / G` with `G` the largest
/// atom count among the positively weighted inputs.
pub fn w2_barycenter(weights: &[f64], measures: &[EmpiricalMeasure]) -> Result<EmpiricalMeasure> {
    let w = normalized(weights, measures.len())?;
    let active: Vec<(f64, &EmpiricalMeasure)> = w.iter().copied().zip(measures).filter(|(wj, _)| *wj > 0.0).collect();
    let g = active
        .iter()
        .map(|(_, mu)| mu.len())
        .max()
        .ok_or(Error::ZeroTotalWeight)?;
    // offsets from the first quantile keep identical inputs exact
    let atoms: Vec<f64> = (0..g)
        .map(|k| {
            let u = (k as f64 + 0.5) / g as f64;
            let q0 = active[0].1.quantile(u);
            q0 + active.iter().map(|(wj, mu)| wj * (mu.quantile(u) - q0)).sum::<f64>()
        })
        .collect();
    EmpiricalMeasure::new(atoms, vec![1.0 / g as f64; g])
}
