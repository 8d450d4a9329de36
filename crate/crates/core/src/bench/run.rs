//! The trial loop: split, tune, impute, score, aggregate.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{BenchConfig, DatasetKind, MetricKind};
use super::metrics::{abs_error, ks_distance};
use super::report::{
    mean_and_std_error, BenchReport, EntryRecord, EstimatorSummary, RunInfo, Timing, TrialReport, TrialResult,
};
use crate::data::{
    chronological_split, gen_synthetic_dist, gen_synthetic_scalar, load_long_csv, load_movielens, load_samples_csv,
    MovieLens,
};
use crate::error::{Error, Result};
use crate::estimators::Estimate;
use crate::framework::EmpiricalMeasure;
use crate::matrix::{DistMatrix, EntryIndex, MaskedMatrix};
use crate::method::Method;
use crate::tuning::{holdout_split, predict_dist, tune_dist, Predictor, SearchSpace, TuneResult, Tuner};

/// Per-trial seeds for data generation, the evaluation split and tuning,
/// drawn from stream `trial` of the run seed.
pub fn trial_seeds(seed: u64, trial: usize) -> (u64, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (rng.next_u64(), rng.next_u64(), rng.next_u64())
}

enum Source {
    Synthetic,
    Scalar(MaskedMatrix),
    Dist(DistMatrix),
    MovieLens(MovieLens),
}

fn load(config: &BenchConfig) -> Result<Source> {
    let path = || config.path.as_ref().expect("validated");
    Ok(match config.dataset {
        DatasetKind::SyntheticScalar | DatasetKind::SyntheticDist => Source::Synthetic,
        DatasetKind::LongCsv => Source::Scalar(load_long_csv(path())?.matrix),
        DatasetKind::SamplesCsv => Source::Dist(load_samples_csv(path())?.matrix),
        DatasetKind::Movielens => Source::MovieLens(load_movielens(path())?),
    })
}

/// What one trial works on.
enum TrialPanel {
    Scalar {
        m: MaskedMatrix,
        theta: Option<Array2<f64>>,
    },
    Dist {
        dm: DistMatrix,
        theta: Option<Array2<f64>>,
    },
}

/// Held-out cells plus, for MovieLens, extra cells hidden from training
/// and the tuning sample.
struct Split {
    eval: Vec<EntryIndex>,
    hidden: Vec<EntryIndex>,
    tune: Option<Vec<EntryIndex>>,
}

fn explicit_eval(config: &BenchConfig, mask: &Array2<bool>) -> Result<Option<Vec<EntryIndex>>> {
    let Some(cells) = &config.eval_entries else {
        return Ok(None);
    };
    let mut out: Vec<EntryIndex> = cells.iter().map(|&[r, c]| EntryIndex::new(r, c)).collect();
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Config("eval_entries is empty".into()));
    }
    for e in &out {
        if mask.get((e.row, e.col)) != Some(&true) {
            return Err(Error::Config(format!(
                "eval entry ({}, {}) is not an observed cell",
                e.row, e.col
            )));
        }
    }
    Ok(Some(out))
}

struct Outcome {
    estimate: Option<f64>,
    error: Option<f64>,
    fallback_used: bool,
    neighbor_count: usize,
    failure: Option<String>,
}

impl Outcome {
    fn failed(msg: String) -> Self {
        Self {
            estimate: None,
            error: None,
            fallback_used: false,
            neighbor_count: 0,
            failure: Some(msg),
        }
    }

    fn scalar(r: Result<Estimate>, truth: f64) -> Self {
        match r {
            Ok(e) => Self {
                estimate: Some(e.value),
                error: Some(abs_error(e.value, truth)),
                fallback_used: e.fallback_used,
                neighbor_count: e.neighbor_count,
                failure: None,
            },
            Err(e) => Self::failed(e.to_string()),
        }
    }
}

struct MethodRun {
    tuned: std::result::Result<TuneResult, String>,
    outcomes: Vec<Outcome>,
}

struct TrialCtx<'a> {
    config: &'a BenchConfig,
    trial: usize,
    space: SearchSpace,
    timings: Vec<Timing>,
}

impl TrialCtx<'_> {
    fn time<T>(&mut self, stage: &'static str, estimators: Vec<Method>, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.push(Timing {
            trial: self.trial,
            stage,
            estimators,
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    /// Tunes and runs scalar methods on `train`, scoring against `truth`.
    fn run_scalar(&mut self, methods: &[Method], train: &MaskedMatrix, split: &Split, truth: &[f64]) -> Vec<MethodRun> {
        let space = self.space.clone();
        let tuner = match &split.tune {
            Some(h) => Tuner::with_holdout(train, h.clone(), &space),
            None => Tuner::new(train, &space),
        };
        let tuner = match tuner {
            Ok(t) => t,
            Err(e) => {
                let msg = format!("tuning setup: {e}");
                return methods
                    .iter()
                    .map(|_| MethodRun {
                        tuned: Err(msg.clone()),
                        outcomes: split.eval.iter().map(|_| Outcome::failed(msg.clone())).collect(),
                    })
                    .collect();
            }
        };
        // neighbor methods share one tuning pass; the rest tune alone
        let batch: Vec<Method> = methods.iter().copied().filter(|m| m.scalar().is_some()).collect();
        let mut batched = if batch.is_empty() {
            Vec::new()
        } else {
            match self.time("tune", batch.clone(), || tuner.tune(&batch)) {
                Ok(results) => results.into_iter().map(Ok).collect(),
                Err(e) => batch.iter().map(|_| Err(e.to_string())).collect(),
            }
        }
        .into_iter();
        let predictor = Predictor::new(train);
        let mut runs = Vec::with_capacity(methods.len());
        for &method in methods {
            let tuned = if method.scalar().is_some() {
                batched.next().expect("one result per batched method")
            } else {
                self.time("tune", vec![method], || tuner.tune(&[method]))
                    .map(|mut r| r.remove(0))
                    .map_err(|e| e.to_string())
            };
            let outcomes = match &tuned {
                Ok(t) => match self.time("predict", vec![method], || {
                    predictor.predict(method, &t.best_params, &split.eval)
                }) {
                    Ok(est) => est
                        .into_iter()
                        .zip(truth)
                        .map(|(r, &z)| Outcome::scalar(r, z))
                        .collect(),
                    Err(e) => split.eval.iter().map(|_| Outcome::failed(e.to_string())).collect(),
                },
                Err(msg) => split
                    .eval
                    .iter()
                    .map(|_| Outcome::failed(format!("tuning: {msg}")))
                    .collect(),
            };
            runs.push(MethodRun { tuned, outcomes });
        }
        runs
    }

    fn run_dist(
        &mut self,
        method: Method,
        train: &DistMatrix,
        split: &Split,
        truth: &[(f64, EmpiricalMeasure)],
    ) -> MethodRun {
        let metric = self.config.metric();
        let space = self.space.clone();
        let tuned = self
            .time("tune", vec![method], || tune_dist(train, method, &space))
            .map_err(|e| e.to_string());
        let outcomes = match &tuned {
            Ok(t) => match self.time("predict", vec![method], || {
                predict_dist(train, method, &t.best_params, &split.eval)
            }) {
                Ok(est) => est
                    .into_iter()
                    .zip(truth)
                    .map(|(r, (z, mu))| match r {
                        Ok(e) => {
                            let mean = e.value.mean();
                            let error = match metric {
                                MetricKind::KsDistance => ks_distance(&e.value, mu),
                                MetricKind::AbsError => abs_error(mean, *z),
                            };
                            Outcome {
                                estimate: Some(mean),
                                error: Some(error),
                                fallback_used: e.fallback_used,
                                neighbor_count: e.neighbor_count,
                                failure: None,
                            }
                        }
                        Err(e) => Outcome::failed(e.to_string()),
                    })
                    .collect(),
                Err(e) => split.eval.iter().map(|_| Outcome::failed(e.to_string())).collect(),
            },
            Err(msg) => split
                .eval
                .iter()
                .map(|_| Outcome::failed(format!("tuning: {msg}")))
                .collect(),
        };
        MethodRun { tuned, outcomes }
    }
}

/// Runs every trial of `config`. Failing entries are recorded, not fatal;
/// only configuration and data-loading problems abort the run.
pub fn run(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let source = load(config)?;
    let metric = config.metric();

    let mut trials = Vec::with_capacity(config.trials);
    let mut entries = Vec::new();
    let mut timings = Vec::new();
    let mut shape = (0, 0);
    for trial in 0..config.trials {
        let (data_seed, split_seed, tune_seed) = trial_seeds(config.seed, trial);
        let panel = match (&source, config.dataset) {
            (Source::Synthetic, DatasetKind::SyntheticScalar) => {
                let g = gen_synthetic_scalar(&config.synthetic_spec(data_seed))?;
                TrialPanel::Scalar {
                    m: g.matrix,
                    theta: Some(g.theta),
                }
            }
            (Source::Synthetic, _) => {
                let g = gen_synthetic_dist(&config.synthetic_spec(data_seed))?;
                TrialPanel::Dist {
                    dm: g.matrix,
                    theta: Some(g.theta),
                }
            }
            (Source::Scalar(m), _) => TrialPanel::Scalar {
                m: m.clone(),
                theta: None,
            },
            (Source::MovieLens(ml), _) => TrialPanel::Scalar {
                m: ml.matrix.clone(),
                theta: None,
            },
            (Source::Dist(dm), _) => TrialPanel::Dist {
                dm: dm.clone(),
                theta: None,
            },
        };
        let mask = match &panel {
            TrialPanel::Scalar { m, .. } => m.mask().clone(),
            TrialPanel::Dist { dm, .. } => dm.mask().clone(),
        };
        shape = mask.dim();
        let n_observed = mask.iter().filter(|&&b| b).count();
        let split = if let Source::MovieLens(ml) = &source {
            let s = chronological_split(ml, config.movielens_tune_size, config.movielens_eval_size, split_seed);
            Split {
                eval: s.late_sample,
                hidden: s.late,
                tune: Some(s.early_sample),
            }
        } else {
            let eval = match explicit_eval(config, &mask)? {
                Some(e) => e,
                None => holdout_split(&mask, config.eval_fraction, split_seed)?,
            };
            Split {
                hidden: eval.clone(),
                eval,
                tune: None,
            }
        };
        let mut ctx = TrialCtx {
            config,
            trial,
            space: config.search_space(tune_seed),
            timings: Vec::new(),
        };
        let mut truths: Vec<f64> = Vec::with_capacity(split.eval.len());
        let runs: Vec<MethodRun> = match &panel {
            TrialPanel::Scalar { m, theta } => {
                let train = m.hide(&split.hidden)?;
                truths = split
                    .eval
                    .iter()
                    .map(|e| match theta {
                        Some(t) => t[[e.row, e.col]],
                        None => m.get(e.row, e.col).expect("eval cells are observed"),
                    })
                    .collect();
                ctx.run_scalar(&config.estimators, &train, &split, &truths)
            }
            TrialPanel::Dist { dm, theta } => {
                let train = dm.hide(&split.hidden)?;
                let reference: Vec<(f64, EmpiricalMeasure)> = split
                    .eval
                    .iter()
                    .map(|e| {
                        let mu = EmpiricalMeasure::uniform(dm.get(e.row, e.col).expect("eval cells are observed"))?;
                        let z = match (theta, metric) {
                            (Some(t), MetricKind::AbsError) => t[[e.row, e.col]],
                            _ => mu.mean(),
                        };
                        Ok((z, mu))
                    })
                    .collect::<Result<_>>()?;
                truths.extend(reference.iter().map(|r| r.0));
                let scalar: Vec<Method> = config
                    .estimators
                    .iter()
                    .copied()
                    .filter(|m| !m.is_distributional())
                    .collect();
                let mut scalar_runs = if scalar.is_empty() {
                    Vec::new()
                } else {
                    ctx.run_scalar(&scalar, &train.means(), &split, &truths)
                }
                .into_iter();
                config
                    .estimators
                    .iter()
                    .map(|&m| {
                        if m.is_distributional() {
                            ctx.run_dist(m, &train, &split, &reference)
                        } else {
                            scalar_runs.next().expect("one run per scalar method")
                        }
                    })
                    .collect()
            }
        };
        timings.append(&mut ctx.timings);

        let mut results = Vec::with_capacity(runs.len());
        for (&method, run) in config.estimators.iter().zip(runs) {
            let mut scored = Vec::new();
            for ((e, o), &z) in split.eval.iter().zip(&run.outcomes).zip(&truths) {
                if let Some(err) = o.error {
                    scored.push(err);
                }
                entries.push(EntryRecord {
                    trial,
                    estimator: method,
                    row: e.row,
                    col: e.col,
                    truth: z,
                    estimate: o.estimate,
                    error: o.error,
                    fallback_used: o.fallback_used,
                    neighbor_count: o.neighbor_count,
                    failure: o.failure.clone(),
                });
            }
            let (mean_error, std_error) = mean_and_std_error(&scored);
            let (tuned_params, tune_score, tune_failure) = match run.tuned {
                Ok(t) => (Some(t.best_params), Some(t.best_score), None),
                Err(msg) => (None, None, Some(msg)),
            };
            results.push(TrialResult {
                estimator: method,
                tuned_params,
                tune_score,
                tune_failure,
                mean_error,
                std_error,
                n_scored: scored.len(),
                n_failed: split.eval.len() - scored.len(),
            });
        }
        trials.push(TrialReport {
            trial,
            data_seed,
            split_seed,
            tune_seed,
            n_observed,
            n_eval: split.eval.len(),
            results,
        });
    }

    let summary = config
        .estimators
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let means: Vec<f64> = trials.iter().filter_map(|t| t.results[k].mean_error).collect();
            let (mean_error, std_error) = mean_and_std_error(&means);
            EstimatorSummary {
                estimator: method,
                mean_error,
                std_error,
                n_trials_scored: means.len(),
                n_failed_entries: trials.iter().map(|t| t.results[k].n_failed).sum(),
            }
        })
        .collect();

    Ok(BenchReport {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        metric,
        n_rows: shape.0,
        n_cols: shape.1,
        trials,
        summary,
        entries,
        run_info: RunInfo {
            started_at,
            elapsed_seconds: clock.elapsed().as_secs_f64(),
            timings,
        },
    })
}

/// Runs `config` and writes the JSON report and entry CSV to its output
/// paths.
pub fn run_to_files(config: &BenchConfig) -> Result<BenchReport> {
    let report = run(config)?;
    report.write(&config.out, &config.entries_path())?;
    Ok(report)
}
