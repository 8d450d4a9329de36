//! Spectral comparators: universal singular value thresholding and
//! SoftImpute.

use faer::Mat;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MaskedMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralParams {
    /// USVT keeps singular values at or above `usvt_eta * sqrt(max(N, T) p)`.
    pub usvt_eta: f64,
    /// SoftImpute nuclear-norm penalty.
    pub si_lambda: f64,
    pub si_max_iter: usize,
    /// SoftImpute stops once the relative Frobenius change drops below this.
    pub si_tol: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            usvt_eta: 2.02,
            si_lambda: 1.0,
            si_max_iter: 500,
            si_tol: 1e-6,
        }
    }
}

impl SpectralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.usvt_eta > 0.0) || !self.usvt_eta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "usvt_eta must be positive, got {}",
                self.usvt_eta
            )));
        }
        if !(self.si_lambda >= 0.0) || !self.si_lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "si_lambda must be nonnegative, got {}",
                self.si_lambda
            )));
        }
        if !(self.si_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "si_tol must be positive, got {}",
                self.si_tol
            )));
        }
        if self.si_max_iter == 0 {
            return Err(Error::InvalidParameter("si_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

fn zero_filled(m: &MaskedMatrix) -> Array2<f64> {
    Array2::from_shape_fn((m.n_rows(), m.n_cols()), |(r, c)| m.get(r, c).unwrap_or(0.0))
}

fn frobenius(x: &Array2<f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rebuilds `U diag(f(s)) V^T`, skipping components mapped to zero. Returns
/// the matrix and the sum of the mapped singular values.
fn spectral_map(y: &Array2<f64>, f: impl Fn(f64) -> f64) -> Result<(Array2<f64>, f64)> {
    let (n, t) = y.dim();
    let svd = Mat::from_fn(n, t, |r, c| y[[r, c]])
        .thin_svd()
        .map_err(|_| Error::SvdNoConvergence)?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut out = Array2::zeros((n, t));
    let mut nuclear = 0.0;
    for k in 0..s.nrows() {
        let g = f(s[k]);
        if g > 0.0 {
            nuclear += g;
            for r in 0..n {
                let a = g * u[(r, k)];
                for c in 0..t {
                    out[[r, c]] += a * v[(c, k)];
                }
            }
        }
    }
    Ok((out, nuclear))
}

/// USVT: zero-fill, hard-threshold the spectrum, rescale by the inverse
/// observation rate and clip to the observed range.
pub fn usvt(m: &MaskedMatrix, params: &SpectralParams) -> Result<Array2<f64>> {
    params.validate()?;
    let (n, t) = (m.n_rows(), m.n_cols());
    let p_hat = m.n_observed() as f64 / (n * t) as f64;
    let tau = params.usvt_eta * ((n.max(t) as f64) * p_hat).sqrt();
    let (lo, hi) = m.observed_range();
    let (est, _) = spectral_map(&zero_filled(m), |s| if s >= tau { s } else { 0.0 })?;
    Ok(est.mapv(|x| (x / p_hat).clamp(lo, hi)))
}

/// Result of a SoftImpute run.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftImputeFit {
    pub completed: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `1/2 ||P_obs(Z - X)||^2 + lambda ||X||_*`, starting with `X = 0`.
    pub objective: Vec<f64>,
}

pub fn soft_impute(m: &MaskedMatrix, params: &SpectralParams) -> Result<Array2<f64>> {
    Ok(soft_impute_fit(m, params)?.completed)
}

pub fn soft_impute_fit(m: &MaskedMatrix, params: &SpectralParams) -> Result<SoftImputeFit> {
    soft_impute_with(m, params, |_, _| {})
}

/// SoftImpute calling `observer(k, X_k)` after every iteration `k >= 1`.
pub fn soft_impute_with(
    m: &MaskedMatrix,
    params: &SpectralParams,
    mut observer: impl FnMut(usize, &Array2<f64>),
) -> Result<SoftImputeFit> {
    params.validate()?;
    let (n, t) = (m.n_rows(), m.n_cols());
    let z = zero_filled(m);
    let mask = m.mask();
    let lambda = params.si_lambda;
    let fully_observed = m.n_observed() == n * t;
    let data_fit = |x: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for ((zv, xv), &seen) in z.iter().zip(x.iter()).zip(mask.iter()) {
            if seen {
                s += (zv - xv) * (zv - xv);
            }
        }
        0.5 * s
    };

    let mut x = Array2::zeros((n, t));
    let mut objective = vec![data_fit(&x)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.si_max_iter {
        iterations += 1;
        let mut y = x.clone();
        for ((yv, zv), &seen) in y.iter_mut().zip(z.iter()).zip(mask.iter()) {
            if seen {
                *yv = *zv;
            }
        }
        let (next, nuclear) = if lambda == 0.0 {
            // zero shrinkage is the identity; the penalty term vanishes
            (y, 0.0)
        } else {
            spectral_map(&y, |s| (s - lambda).max(0.0))?
        };
        let change = frobenius(&(&next - &x));
        let base = frobenius(&x);
        x = next;
        objective.push(data_fit(&x) + lambda * nuclear);
        observer(iterations, &x);
        // with nothing missing the update ignores X, so X_1 is the fixed point
        let rel = if base > 0.0 {
            change / base
        } else if change == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if fully_observed || rel < params.si_tol {
            converged = true;
            break;
        }
    }
    Ok(SoftImputeFit {
        completed: x,
        iterations,
        converged,
        objective,
    })
}
