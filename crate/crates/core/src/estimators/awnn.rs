//! Adaptively weighted nearest neighbors.

use serde::Serialize;

use super::Estimate;
use crate::error::{Error, Result};
use crate::framework::{DissimilarityProfile, PairwiseTable, SquaredDifference};
use crate::matrix::{Axis, EntryIndex, MaskedMatrix, Panel};

/// Lower bound on the noise variance during iteration.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Simplex weights over a profile's candidates, zero for candidates that
/// are unobserved in the target column or have undefined dissimilarity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub candidates: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn support(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }
}

/// `2 log(2N)` for a matrix with `n_rows` rows.
pub fn default_reg_log_term(n_rows: usize) -> f64 {
    2.0 * (2.0 * n_rows as f64).ln()
}

/// Minimizer of `c sum v^2 + sum v rho` over the simplex, for `rho` sorted
/// ascending and `c > 0`. Writes `v` in the same order.
fn water_fill(rho: &[f64], c: f64, v: &mut Vec<f64>) {
    v.clear();
    let base = rho[0];
    // shifted levels u_k = (rho_k - rho_0) / 2c; weights are max(0, tau - u_k)
    let scale = 0.5 / c;
    let mut cum = 0.0;
    let mut tau = 1.0;
    let mut active = 0;
    for (k, &r) in rho.iter().enumerate() {
        let u = (r - base) * scale;
        let cand = (1.0 + cum + u) / (k + 1) as f64;
        if k > 0 && !(cand > u) {
            break;
        }
        cum += u;
        tau = cand;
        active = k + 1;
    }
    let mut total = 0.0;
    for &r in &rho[..active] {
        let w = (tau - (r - base) * scale).max(0.0);
        v.push(w);
        total += w;
    }
    for w in v.iter_mut() {
        *w /= total;
    }
    v.resize(rho.len(), 0.0);
}

/// Exact simplex-constrained minimizer of
/// `reg_log_term * sigma2 * sum v_k^2 + sum v_k rho_k` over the candidates
/// of `profile` with `col_mask` set and a defined dissimilarity.
///
/// `col_mask[k]` is the observation bit of candidate `profile.candidates[k]`
/// in the target column.
pub fn awnn_weights(
    profile: &DissimilarityProfile,
    col_mask: &[bool],
    sigma2: f64,
    reg_log_term: f64,
) -> Result<WeightVector> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::NonPositiveVariance(sigma2));
    }
    if !(reg_log_term > 0.0) || !reg_log_term.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "reg_log_term must be positive, got {reg_log_term}"
        )));
    }
    if col_mask.len() != profile.len() {
        return Err(Error::DimensionMismatch {
            expected: (profile.len(), 1),
            found: (col_mask.len(), 1),
        });
    }
    let mut order: Vec<usize> = (0..profile.len())
        .filter(|&k| col_mask[k] && profile.defined[k])
        .collect();
    if order.is_empty() {
        return Err(Error::NoObservedDonor {
            row: profile.target,
            col: profile.exclude,
        });
    }
    order.sort_by(|&a, &b| profile.values[a].total_cmp(&profile.values[b]).then(a.cmp(&b)));
    let rho: Vec<f64> = order.iter().map(|&k| profile.values[k]).collect();
    let mut v = Vec::with_capacity(rho.len());
    water_fill(&rho, reg_log_term * sigma2, &mut v);
    let mut weights = vec![0.0; profile.len()];
    for (&k, &w) in order.iter().zip(&v) {
        weights[k] = w;
    }
    Ok(WeightVector {
        candidates: profile.candidates.clone(),
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AwnnConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// `None` means [`default_reg_log_term`] of the row count.
    pub reg_log_term: Option<f64>,
}

impl Default for AwnnConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-6,
            reg_log_term: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AwnnState {
    pub sigma2: f64,
    /// Final weights per requested target; `None` where no donor exists.
    pub weights: Vec<Option<WeightVector>>,
    pub iterations: usize,
    pub converged: bool,
}

/// AWNN over `targets` with a fixed-point iteration on the noise variance.
///
/// Each iteration re-estimates every observed entry from the other rows
/// (its own column is excluded from the row distances, so the entry never
/// informs its own estimate) and sets the variance to the mean squared
/// residual. Per-target failures are reported in place.
pub fn impute_awnn(
    m: &MaskedMatrix,
    targets: &[EntryIndex],
    config: &AwnnConfig,
) -> Result<(Vec<Result<Estimate>>, AwnnState)> {
    if m.n_observed() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: m.n_observed(),
        });
    }
    if !(config.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be nonnegative, got {}",
            config.tol
        )));
    }
    for &t in targets {
        m.check_index(t)?;
    }
    let reg = config.reg_log_term.unwrap_or_else(|| default_reg_log_term(m.n_rows()));
    if !(reg > 0.0) || !reg.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "reg_log_term must be positive, got {reg}"
        )));
    }
    let table = PairwiseTable::from_metric(m, &SquaredDifference, Axis::Row);
    let profile = |e: EntryIndex| table.profile_with_metric(m, &SquaredDifference, e.row, e.col);

    // (rho, z) of the donors of each observed entry, ascending in rho
    let observed = m.observed_entries();
    let donors: Vec<(f64, Vec<(f64, f64)>)> = observed
        .iter()
        .map(|&e| {
            let p = profile(e);
            let mut d: Vec<(f64, f64)> = p
                .sorted_defined()
                .into_iter()
                .filter_map(|(rho, j)| m.get(j, e.col).map(|z| (rho, z)))
                .collect();
            d.shrink_to_fit();
            (m.get(e.row, e.col).expect("observed"), d)
        })
        .collect();

    let n = m.n_observed() as f64;
    let mean = m.observed_values().sum::<f64>() / n;
    let mut sigma2 = (m.observed_values().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n).max(SIGMA2_FLOOR);

    let mut iterations = 0;
    let mut converged = false;
    let mut rho = Vec::new();
    let mut v = Vec::new();
    while iterations < config.max_iter {
        iterations += 1;
        let c = reg * sigma2;
        let mut sse = 0.0;
        let mut used = 0usize;
        for (z, d) in &donors {
            if d.is_empty() {
                continue;
            }
            rho.clear();
            rho.extend(d.iter().map(|x| x.0));
            water_fill(&rho, c, &mut v);
            let est: f64 = v.iter().zip(d).map(|(w, x)| w * x.1).sum();
            sse += (z - est) * (z - est);
            used += 1;
        }
        if used == 0 {
            converged = true;
            break;
        }
        let next = (sse / used as f64).max(SIGMA2_FLOOR);
        let delta = (next - sigma2).abs();
        sigma2 = next;
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    let mut estimates = Vec::with_capacity(targets.len());
    let mut weights = Vec::with_capacity(targets.len());
    for &target in targets {
        let p = profile(target);
        let col_mask: Vec<bool> = p.candidates.iter().map(|&j| m.is_observed(j, target.col)).collect();
        match awnn_weights(&p, &col_mask, sigma2, reg) {
            Ok(w) => {
                let value = w
                    .candidates
                    .iter()
                    .zip(&w.weights)
                    .filter(|(_, &wk)| wk > 0.0)
                    .map(|(&j, &wk)| wk * m.get(j, target.col).expect("weighted donors are observed"))
                    .sum();
                estimates.push(Ok(Estimate {
                    value,
                    fallback_used: false,
                    neighbor_count: w.support(),
                }));
                weights.push(Some(w));
            }
            Err(Error::NoObservedDonor { .. }) => {
                estimates.push(Err(Error::NoObservedDonor {
                    row: target.row,
                    col: target.col,
                }));
                weights.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((
        estimates,
        AwnnState {
            sigma2,
            weights,
            iterations,
            converged,
        },
    ))
}
