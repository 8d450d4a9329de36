//! Hyperparameter selection on held-out observed cells.
//!
//! A seeded fraction of the observed cells is hidden, every candidate in
//! the grid imputes them from the rest, and the candidate with the lowest
//! mean error wins (first in grid order on ties). Scalar nearest-neighbor
//! methods share one pass over the holdout: each target's neighborhoods
//! are built once and every candidate of every method is read off them.

use std::cell::OnceCell;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{soft_impute, usvt, SpectralParams};
use crate::bench::metrics::{abs_error, ks_distance};
use crate::error::{Error, Result};
use crate::estimators::{
    impute_awnn, profile_percentile, AwnnConfig, DistModel, Estimate, ScalarHyperParams, ScalarMethod, ScalarModel,
    Threshold,
};
use crate::framework::{DissimilarityProfile, EmpiricalMeasure};
use crate::matrix::{Axis, DistMatrix, EntryIndex, MaskedMatrix, Panel};
use crate::method::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub eta_row_percentiles: Vec<f64>,
    pub eta_col_percentiles: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub usvt_eta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Grids larger than this are subsampled (seeded, order kept).
    pub budget: usize,
    pub seed: u64,
    pub holdout_fraction: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            eta_row_percentiles: vec![0.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0, 75.0, 100.0],
            eta_col_percentiles: vec![0.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0, 75.0, 100.0],
            alpha_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            usvt_eta_grid: vec![0.5, 1.0, 1.5, 2.02, 3.0],
            lambda_grid: vec![0.01, 0.1, 1.0, 10.0],
            budget: 1000,
            seed: 0,
            holdout_fraction: 0.2,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidParameter("budget must be at least 1".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "holdout_fraction {} outside (0, 1]",
                self.holdout_fraction
            )));
        }
        for q in self.eta_row_percentiles.iter().chain(&self.eta_col_percentiles) {
            Threshold::Percentile(*q).validate()?;
        }
        if self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidParameter("alpha grid values must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A point of a method's search grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Candidate {
    Neighbors(ScalarHyperParams),
    Spectral(SpectralParams),
}

impl Candidate {
    fn nn(&self) -> Result<&ScalarHyperParams> {
        match self {
            Candidate::Neighbors(p) => Ok(p),
            Candidate::Spectral(_) => Err(Error::InvalidParameter("expected neighbor parameters".into())),
        }
    }

    fn spectral(&self) -> Result<&SpectralParams> {
        match self {
            Candidate::Spectral(p) => Ok(p),
            Candidate::Neighbors(_) => Err(Error::InvalidParameter("expected spectral parameters".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub params: Candidate,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub method: Method,
    pub best_params: Candidate,
    pub best_score: f64,
    pub evaluations: Vec<Evaluation>,
    pub holdout: Vec<EntryIndex>,
}

/// Seeded uniform subset of the observed cells of size
/// `round(fraction * observed)`, at least one, in row-major order.
pub fn holdout_split(mask: &Array2<bool>, fraction: f64, seed: u64) -> Result<Vec<EntryIndex>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction {fraction} outside (0, 1]"
        )));
    }
    let observed: Vec<EntryIndex> = mask
        .indexed_iter()
        .filter(|(_, &seen)| seen)
        .map(|((r, c), _)| EntryIndex::new(r, c))
        .collect();
    if observed.is_empty() {
        return Err(Error::AllMissing);
    }
    let k = ((fraction * observed.len() as f64).round() as usize).clamp(1, observed.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, observed.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| observed[i]).collect())
}

/// Nearest-rank percentile of a profile's defined dissimilarities.
pub fn percentile_to_threshold(profile: &DissimilarityProfile, q: f64) -> Result<f64> {
    Threshold::Percentile(q).validate()?;
    profile_percentile(profile, q)
}

/// The (possibly subsampled) search grid of `method`, in grid order.
pub fn candidates(method: Method, space: &SearchSpace) -> Result<Vec<Candidate>> {
    let base = ScalarHyperParams::default();
    let pct = Threshold::Percentile;
    let nonempty = |v: &[f64]| {
        if v.is_empty() {
            Err(Error::EmptySearchSpace)
        } else {
            Ok(())
        }
    };
    let rows = &space.eta_row_percentiles;
    let cols = &space.eta_col_percentiles;
    let mut grid = Vec::new();
    match method {
        Method::RowNN | Method::KernelNN(Axis::Row) | Method::W2NN(Axis::Row) => {
            nonempty(rows)?;
            for &q in rows {
                grid.push(ScalarHyperParams {
                    eta_row: pct(q),
                    ..base
                });
            }
        }
        Method::ColNN | Method::KernelNN(Axis::Col) | Method::W2NN(Axis::Col) => {
            nonempty(cols)?;
            for &q in cols {
                grid.push(ScalarHyperParams {
                    eta_col: pct(q),
                    ..base
                });
            }
        }
        Method::TSNN | Method::DRNN => {
            nonempty(rows)?;
            nonempty(cols)?;
            for &q1 in rows {
                for &q2 in cols {
                    grid.push(ScalarHyperParams {
                        eta_row: pct(q1),
                        eta_col: pct(q2),
                        ..base
                    });
                }
            }
        }
        Method::AutoNN => {
            nonempty(rows)?;
            nonempty(cols)?;
            nonempty(&space.alpha_grid)?;
            for &q1 in rows {
                for &q2 in cols {
                    for &alpha in &space.alpha_grid {
                        grid.push(ScalarHyperParams {
                            eta_row: pct(q1),
                            eta_col: pct(q2),
                            alpha,
                            awnn_reg: None,
                        });
                    }
                }
            }
        }
        Method::AWNN => grid.push(base),
        Method::USVT | Method::SoftImpute => {
            let values = if method == Method::USVT {
                &space.usvt_eta_grid
            } else {
                &space.lambda_grid
            };
            nonempty(values)?;
            let spectral: Vec<Candidate> = values
                .iter()
                .map(|&v| {
                    let mut p = SpectralParams::default();
                    if method == Method::USVT {
                        p.usvt_eta = v;
                    } else {
                        p.si_lambda = v;
                    }
                    Candidate::Spectral(p)
                })
                .collect();
            return subsample(spectral, space);
        }
    }
    subsample(grid.into_iter().map(Candidate::Neighbors).collect(), space)
}

fn subsample(grid: Vec<Candidate>, space: &SearchSpace) -> Result<Vec<Candidate>> {
    if space.budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    if grid.len() <= space.budget {
        return Ok(grid);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(space.seed);
    let mut keep = rand::seq::index::sample(&mut rng, grid.len(), space.budget).into_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| grid[i]).collect())
}

fn pick_best(method: Method, grid: Vec<Candidate>, scores: Vec<f64>, holdout: &[EntryIndex]) -> TuneResult {
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = k;
        }
    }
    TuneResult {
        method,
        best_params: grid[best],
        best_score: scores[best],
        evaluations: grid
            .into_iter()
            .zip(scores)
            .map(|(params, score)| Evaluation { params, score })
            .collect(),
        holdout: holdout.to_vec(),
    }
}

/// Imputes `targets` of a scalar panel, caching the neighbor tables across
/// calls.
pub struct Predictor<'a> {
    m: &'a MaskedMatrix,
    model: OnceCell<ScalarModel>,
}

impl<'a> Predictor<'a> {
    pub fn new(m: &'a MaskedMatrix) -> Self {
        Self {
            m,
            model: OnceCell::new(),
        }
    }

    pub fn model(&self) -> &ScalarModel {
        self.model.get_or_init(|| ScalarModel::new(self.m.clone()))
    }

    pub fn predict(&self, method: Method, params: &Candidate, targets: &[EntryIndex]) -> Result<Vec<Result<Estimate>>> {
        if let Some(sm) = method.scalar() {
            let p = params.nn()?;
            p.validate()?;
            let model = self.model();
            return Ok(targets.iter().map(|&t| model.impute(t, sm, p)).collect());
        }
        match method {
            Method::AWNN => {
                let p = params.nn()?;
                let config = AwnnConfig {
                    reg_log_term: p.awnn_reg,
                    ..AwnnConfig::default()
                };
                Ok(impute_awnn(self.m, targets, &config)?.0)
            }
            Method::USVT | Method::SoftImpute => {
                let p = params.spectral()?;
                let completed = if method == Method::USVT {
                    usvt(self.m, p)?
                } else {
                    soft_impute(self.m, p)?
                };
                let n_obs = self.m.n_observed();
                Ok(targets
                    .iter()
                    .map(|t| {
                        Ok(Estimate {
                            value: completed[[t.row, t.col]],
                            fallback_used: false,
                            neighbor_count: n_obs,
                        })
                    })
                    .collect())
            }
            _ => Err(Error::InvalidParameter(format!(
                "{method} needs a distributional panel"
            ))),
        }
    }
}

/// Imputes `targets` of a scalar panel with fixed parameters.
pub fn predict(
    m: &MaskedMatrix,
    method: Method,
    params: &Candidate,
    targets: &[EntryIndex],
) -> Result<Vec<Result<Estimate>>> {
    Predictor::new(m).predict(method, params, targets)
}

/// Imputes `targets` of a distributional panel with fixed parameters. The
/// MMD bandwidth is chosen from `dm` itself.
pub fn predict_dist(
    dm: &DistMatrix,
    method: Method,
    params: &Candidate,
    targets: &[EntryIndex],
) -> Result<Vec<Result<Estimate<EmpiricalMeasure>>>> {
    let (kind, axis) = method
        .dist()
        .ok_or_else(|| Error::InvalidParameter(format!("{method} needs a scalar panel")))?;
    let p = params.nn()?;
    let eta = dist_threshold(p, axis);
    let model = DistModel::new(dm, kind.resolve(dm), axis);
    Ok(targets.iter().map(|&t| model.impute(t, eta)).collect())
}

fn dist_threshold(p: &ScalarHyperParams, axis: Axis) -> Threshold {
    match axis {
        Axis::Row => p.eta_row,
        Axis::Col => p.eta_col,
    }
}

/// Holdout and training panel shared by every method tuned on one scalar
/// matrix.
pub struct Tuner {
    space: SearchSpace,
    holdout: Vec<EntryIndex>,
    truth: Vec<f64>,
    train: MaskedMatrix,
    penalty: f64,
}

impl Tuner {
    pub fn new(m: &MaskedMatrix, space: &SearchSpace) -> Result<Self> {
        space.validate()?;
        let holdout = holdout_split(m.mask(), space.holdout_fraction, space.seed)?;
        Self::with_holdout(m, holdout, space)
    }

    /// Tunes against an explicit set of observed cells instead of a seeded
    /// fraction.
    pub fn with_holdout(m: &MaskedMatrix, holdout: Vec<EntryIndex>, space: &SearchSpace) -> Result<Self> {
        space.validate()?;
        if holdout.is_empty() {
            return Err(Error::InvalidParameter("holdout is empty".into()));
        }
        for e in &holdout {
            m.check_index(*e)?;
            if m.get(e.row, e.col).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "holdout cell ({}, {}) is not observed",
                    e.row, e.col
                )));
            }
        }
        let train = m.hide(&holdout)?;
        let truth = holdout
            .iter()
            .map(|e| m.get(e.row, e.col).expect("holdout is observed"))
            .collect();
        let (lo, hi) = m.observed_range();
        Ok(Self {
            space: space.clone(),
            holdout,
            truth,
            train,
            penalty: hi - lo,
        })
    }

    pub fn holdout(&self) -> &[EntryIndex] {
        &self.holdout
    }

    pub fn train(&self) -> &MaskedMatrix {
        &self.train
    }

    fn score(&self, estimates: &[Result<Estimate>]) -> f64 {
        let total: f64 = estimates
            .iter()
            .zip(&self.truth)
            .map(|(e, &z)| e.as_ref().map_or(self.penalty, |e| abs_error(e.value, z)))
            .sum();
        total / self.truth.len() as f64
    }

    /// One result per method, in the order given.
    pub fn tune(&self, methods: &[Method]) -> Result<Vec<TuneResult>> {
        let grids: Vec<Vec<Candidate>> = methods
            .iter()
            .map(|&m| candidates(m, &self.space))
            .collect::<Result<_>>()?;
        let mut scores: Vec<Option<Vec<f64>>> = vec![None; methods.len()];

        let scalar: Vec<usize> = (0..methods.len()).filter(|&k| methods[k].scalar().is_some()).collect();
        if !scalar.is_empty() {
            let found = self.scalar_pass(methods, &grids, &scalar)?;
            for (k, s) in scalar.iter().zip(found) {
                scores[*k] = Some(s);
            }
        }
        let predictor = Predictor::new(&self.train);
        for (k, &method) in methods.iter().enumerate() {
            if scores[k].is_some() {
                continue;
            }
            let mut s = Vec::with_capacity(grids[k].len());
            for c in &grids[k] {
                s.push(self.score(&predictor.predict(method, c, &self.holdout)?));
            }
            scores[k] = Some(s);
        }
        Ok(methods
            .iter()
            .zip(grids)
            .zip(scores)
            .map(|((&m, g), s)| pick_best(m, g, s.expect("every method scored"), &self.holdout))
            .collect())
    }

    fn scalar_pass(&self, methods: &[Method], grids: &[Vec<Candidate>], which: &[usize]) -> Result<Vec<Vec<f64>>> {
        let model = ScalarModel::new(self.train.clone());
        let plans: Vec<(ScalarMethod, Vec<ScalarHyperParams>)> = which
            .iter()
            .map(|&k| {
                let params = grids[k].iter().map(|c| c.nn().copied()).collect::<Result<Vec<_>>>()?;
                Ok((methods[k].scalar().expect("scalar method"), params))
            })
            .collect::<Result<_>>()?;
        let mut sums: Vec<Vec<f64>> = plans.iter().map(|(_, p)| vec![0.0; p.len()]).collect();
        for (&target, &z) in self.holdout.iter().zip(&self.truth) {
            let mut hood = model.neighborhoods(target)?;
            let (mut kr, mut kc) = (0, 0);
            for (method, params) in &plans {
                if matches!(method, ScalarMethod::RowNN | ScalarMethod::ColNN) {
                    continue;
                }
                for p in params {
                    kr = kr.max(hood.row_count(p.eta_row));
                    kc = kc.max(hood.col_count(p.eta_col));
                }
            }
            hood.reserve(kr, kc);
            for ((method, params), acc) in plans.iter().zip(sums.iter_mut()) {
                for (p, a) in params.iter().zip(acc.iter_mut()) {
                    *a += hood
                        .estimate(*method, p)
                        .map_or(self.penalty, |e| abs_error(e.value, z));
                }
            }
        }
        let n = self.holdout.len() as f64;
        Ok(sums
            .into_iter()
            .map(|v| v.into_iter().map(|s| s / n).collect())
            .collect())
    }
}

/// Tunes one method on a scalar panel.
pub fn tune(m: &MaskedMatrix, method: Method, space: &SearchSpace) -> Result<TuneResult> {
    Ok(Tuner::new(m, space)?.tune(&[method])?.remove(0))
}

/// Tunes a distributional method, scoring each candidate by the mean KS
/// distance between imputed and held-out measures. Failures score 1.
pub fn tune_dist(dm: &DistMatrix, method: Method, space: &SearchSpace) -> Result<TuneResult> {
    space.validate()?;
    let (kind, axis) = method
        .dist()
        .ok_or_else(|| Error::InvalidParameter(format!("{method} needs a scalar panel")))?;
    let grid = candidates(method, space)?;
    let holdout = holdout_split(dm.mask(), space.holdout_fraction, space.seed)?;
    let train = dm.hide(&holdout)?;
    let truth: Vec<EmpiricalMeasure> = holdout
        .iter()
        .map(|e| EmpiricalMeasure::uniform(dm.get(e.row, e.col).expect("holdout is observed")))
        .collect::<Result<_>>()?;
    let model = DistModel::new(&train, kind.resolve(&train), axis);
    let mut scores = Vec::with_capacity(grid.len());
    for c in &grid {
        let eta = dist_threshold(c.nn()?, axis);
        let mut total = 0.0;
        for (&t, mu) in holdout.iter().zip(&truth) {
            total += model.impute(t, eta).map_or(1.0, |e| ks_distance(&e.value, mu));
        }
        scores.push(total / holdout.len() as f64);
    }
    Ok(pick_best(method, grid, scores, &holdout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(seed: u64, n: usize, t: usize, p: f64) -> MaskedMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..n * t).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut mask: Vec<bool> = (0..n * t).map(|_| rng.random_bool(p)).collect();
        mask[0] = true;
        mask[1] = true;
        MaskedMatrix::from_vecs(n, t, vals, mask).unwrap()
    }

    #[test]
    fn holdout_sizes() {
        let mask = Array2::from_shape_fn((10, 10), |_| true);
        assert_eq!(holdout_split(&mask, 0.001, 1).unwrap().len(), 1);
        assert_eq!(holdout_split(&mask, 1.0, 1).unwrap().len(), 100);
        let a = holdout_split(&mask, 0.2, 42).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, holdout_split(&mask, 0.2, 42).unwrap());
        assert!(matches!(
            holdout_split(&Array2::from_elem((2, 2), false), 0.5, 0),
            Err(Error::AllMissing)
        ));
    }

    #[test]
    fn holdout_is_observed() {
        let m = random_matrix(3, 9, 9, 0.5);
        for e in holdout_split(m.mask(), 0.3, 9).unwrap() {
            assert!(m.mask()[[e.row, e.col]]);
        }
    }

    #[test]
    fn percentile_examples() {
        let profile = |vals: Vec<f64>| DissimilarityProfile {
            axis: Axis::Row,
            target: 0,
            exclude: 0,
            candidates: (1..=vals.len()).collect(),
            defined: vec![true; vals.len()],
            values: vals,
        };
        let p = profile(vec![2.0, 1.0, 3.0]);
        assert_eq!(percentile_to_threshold(&p, 0.0).unwrap(), 1.0);
        assert_eq!(percentile_to_threshold(&p, 100.0).unwrap(), 3.0);
        let p = profile((0..=10).map(f64::from).collect());
        assert_eq!(percentile_to_threshold(&p, 50.0).unwrap(), 5.0);
        let mut empty = profile(vec![1.0]);
        empty.defined[0] = false;
        assert!(matches!(
            percentile_to_threshold(&empty, 50.0),
            Err(Error::NoDefinedDistances)
        ));
    }

    #[test]
    fn budget_one_singleton() {
        let m = random_matrix(1, 8, 8, 0.8);
        let space = SearchSpace {
            eta_row_percentiles: vec![35.0],
            budget: 1,
            ..SearchSpace::default()
        };
        let r = tune(&m, Method::RowNN, &space).unwrap();
        assert_eq!(r.evaluations.len(), 1);
        assert_eq!(r.best_score, r.evaluations[0].score);
    }

    #[test]
    fn subsampling_respects_budget_and_order() {
        let space = SearchSpace {
            budget: 7,
            seed: 3,
            ..SearchSpace::default()
        };
        let full = candidates(Method::AutoNN, &SearchSpace::default()).unwrap();
        let sub = candidates(Method::AutoNN, &space).unwrap();
        assert_eq!(sub.len(), 7);
        let positions: Vec<usize> = sub.iter().map(|c| full.iter().position(|f| f == c).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sub, candidates(Method::AutoNN, &space).unwrap());
    }

    #[test]
    fn empty_grid_is_an_error() {
        let space = SearchSpace {
            eta_row_percentiles: vec![],
            ..SearchSpace::default()
        };
        assert!(matches!(candidates(Method::TSNN, &space), Err(Error::EmptySearchSpace)));
        assert!(candidates(Method::ColNN, &space).is_ok());
    }

    #[test]
    fn zero_error_candidate_wins() {
        // rows come in identical triples; the tightest radius picks a copy
        let base: Vec<Vec<f64>> = (0..5)
            .map(|k| (0..6).map(|c| (k * 7 + c * c) as f64).collect())
            .collect();
        let vals: Vec<f64> = (0..15).flat_map(|r| base[r / 3].clone()).collect();
        let m = MaskedMatrix::from_vecs(15, 6, vals, vec![true; 90]).unwrap();
        let space = SearchSpace {
            eta_row_percentiles: vec![100.0, 0.0],
            holdout_fraction: 0.1,
            ..SearchSpace::default()
        };
        let r = tune(&m, Method::RowNN, &space).unwrap();
        // some copy of every held-out cell stays observed
        for e in &r.holdout {
            let group = e.row / 3 * 3;
            assert!((group..group + 3).any(|j| !r.holdout.contains(&EntryIndex::new(j, e.col))));
        }
        assert_eq!(r.best_score, 0.0);
        assert_eq!(r.best_params, r.evaluations[1].params);
    }

    #[test]
    fn batched_tuning_matches_single_method_runs() {
        let m = random_matrix(5, 12, 10, 0.7);
        let space = SearchSpace {
            eta_row_percentiles: vec![10.0, 50.0, 100.0],
            eta_col_percentiles: vec![20.0, 75.0],
            alpha_grid: vec![0.0, 0.5, 1.0],
            ..SearchSpace::default()
        };
        let methods = [Method::RowNN, Method::TSNN, Method::DRNN, Method::AutoNN, Method::USVT];
        let batched = Tuner::new(&m, &space).unwrap().tune(&methods).unwrap();
        for (r, &method) in batched.iter().zip(&methods) {
            assert_eq!(r, &tune(&m, method, &space).unwrap());
        }
    }

    #[test]
    fn best_score_reproduces() {
        let m = random_matrix(6, 10, 10, 0.75);
        let space = SearchSpace::default();
        for method in [Method::TSNN, Method::AutoNN, Method::SoftImpute, Method::AWNN] {
            let r = tune(&m, method, &space).unwrap();
            let train = m.hide(&r.holdout).unwrap();
            let est = predict(&train, method, &r.best_params, &r.holdout).unwrap();
            let (lo, hi) = m.observed_range();
            let total: f64 = est
                .iter()
                .zip(&r.holdout)
                .map(|(e, t)| {
                    e.as_ref()
                        .map_or(hi - lo, |e| (e.value - m.get(t.row, t.col).unwrap()).abs())
                })
                .sum();
            assert_eq!(total / r.holdout.len() as f64, r.best_score);
            let min = r.evaluations.iter().map(|e| e.score).fold(f64::INFINITY, f64::min);
            assert_eq!(r.best_score, min);
        }
    }

    #[test]
    fn holdout_values_never_leak() {
        let m = random_matrix(7, 10, 9, 0.8);
        let space = SearchSpace::default();
        let tuner = Tuner::new(&m, &space).unwrap();
        let mut garbage = m.raw_values().clone();
        for e in tuner.holdout() {
            garbage[[e.row, e.col]] = 1e6;
        }
        let poisoned = MaskedMatrix::new(garbage, m.mask().clone()).unwrap();
        let train = poisoned.hide(tuner.holdout()).unwrap();
        assert_eq!(&train, tuner.train());
        for method in [Method::RowNN, Method::DRNN, Method::USVT] {
            for c in candidates(method, &space).unwrap() {
                let a = predict(tuner.train(), method, &c, tuner.holdout()).unwrap();
                let b = predict(&train, method, &c, tuner.holdout()).unwrap();
                let va: Vec<Option<f64>> = a.iter().map(|e| e.as_ref().ok().map(|e| e.value)).collect();
                let vb: Vec<Option<f64>> = b.iter().map(|e| e.as_ref().ok().map(|e| e.value)).collect();
                assert_eq!(va, vb);
            }
        }
    }

    #[test]
    fn tuning_is_deterministic() {
        let m = random_matrix(8, 10, 10, 0.7);
        let space = SearchSpace {
            seed: 13,
            ..SearchSpace::default()
        };
        assert_eq!(
            tune(&m, Method::AutoNN, &space).unwrap(),
            tune(&m, Method::AutoNN, &space).unwrap()
        );
    }
}
