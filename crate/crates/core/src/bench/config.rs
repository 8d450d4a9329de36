//! Benchmark configuration, read from flat TOML and overridable from the
//! command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SyntheticSpec;
use crate::error::{Error, Result};
use crate::method::Method;
use crate::tuning::SearchSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    SyntheticScalar,
    SyntheticDist,
    LongCsv,
    SamplesCsv,
    Movielens,
}

impl DatasetKind {
    const ALL: [DatasetKind; 5] = [
        DatasetKind::SyntheticScalar,
        DatasetKind::SyntheticDist,
        DatasetKind::LongCsv,
        DatasetKind::SamplesCsv,
        DatasetKind::Movielens,
    ];

    pub fn id(self) -> &'static str {
        match self {
            DatasetKind::SyntheticScalar => "synthetic-scalar",
            DatasetKind::SyntheticDist => "synthetic-dist",
            DatasetKind::LongCsv => "long-csv",
            DatasetKind::SamplesCsv => "samples-csv",
            DatasetKind::Movielens => "movielens",
        }
    }

    pub fn is_distributional(self) -> bool {
        matches!(self, DatasetKind::SyntheticDist | DatasetKind::SamplesCsv)
    }

    pub fn is_synthetic(self) -> bool {
        matches!(self, DatasetKind::SyntheticScalar | DatasetKind::SyntheticDist)
    }

    pub fn needs_path(self) -> bool {
        !self.is_synthetic()
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        DatasetKind::ALL
            .into_iter()
            .find(|d| d.id() == key)
            .ok_or_else(|| Error::Config(format!("unknown dataset '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    AbsError,
    KsDistance,
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "abs_error" => Ok(MetricKind::AbsError),
            "ks_distance" => Ok(MetricKind::KsDistance),
            _ => Err(Error::Config(format!("unknown metric '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub dataset: DatasetKind,
    /// Input file for the file-backed datasets.
    pub path: Option<PathBuf>,
    pub estimators: Vec<Method>,

    // synthetic panels
    pub n_rows: usize,
    pub n_cols: usize,
    pub rank: usize,
    pub sigma: f64,
    pub propensity: f64,
    pub sample_count: usize,

    pub trials: usize,
    pub seed: u64,
    /// Defaults to `ks_distance` for distributional datasets and
    /// `abs_error` otherwise.
    pub metric: Option<MetricKind>,

    /// Fraction of observed cells evaluated per trial.
    pub eval_fraction: f64,
    /// Fixed evaluation cells as `[row, col]`; replaces `eval_fraction`.
    pub eval_entries: Option<Vec<[usize; 2]>>,
    /// MovieLens: tuning sample from the earliest 80% of ratings.
    pub movielens_tune_size: usize,
    /// MovieLens: evaluation sample from the latest 20% of ratings.
    pub movielens_eval_size: usize,

    // tuning
    pub tune_fraction: f64,
    pub eta_row_percentiles: Vec<f64>,
    pub eta_col_percentiles: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub usvt_eta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub budget: usize,

    /// JSON report; the per-entry CSV goes next to it with extension
    /// `.entries.csv`.
    pub out: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let space = SearchSpace::default();
        Self {
            dataset: DatasetKind::SyntheticScalar,
            path: None,
            estimators: vec![Method::RowNN, Method::TSNN, Method::DRNN, Method::AutoNN],
            n_rows: 50,
            n_cols: 50,
            rank: 4,
            sigma: 0.1,
            propensity: 0.5,
            sample_count: 100,
            trials: 1,
            seed: 0,
            metric: None,
            eval_fraction: 0.2,
            eval_entries: None,
            movielens_tune_size: 100,
            movielens_eval_size: 500,
            tune_fraction: space.holdout_fraction,
            eta_row_percentiles: space.eta_row_percentiles,
            eta_col_percentiles: space.eta_col_percentiles,
            alpha_grid: space.alpha_grid,
            usvt_eta_grid: space.usvt_eta_grid,
            lambda_grid: space.lambda_grid,
            budget: space.budget,
            out: PathBuf::from("nncomplete-report.json"),
        }
    }
}

impl BenchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn metric(&self) -> MetricKind {
        self.metric.unwrap_or(if self.dataset.is_distributional() {
            MetricKind::KsDistance
        } else {
            MetricKind::AbsError
        })
    }

    /// Search space for one trial's tuning run.
    pub fn search_space(&self, seed: u64) -> SearchSpace {
        SearchSpace {
            eta_row_percentiles: self.eta_row_percentiles.clone(),
            eta_col_percentiles: self.eta_col_percentiles.clone(),
            alpha_grid: self.alpha_grid.clone(),
            usvt_eta_grid: self.usvt_eta_grid.clone(),
            lambda_grid: self.lambda_grid.clone(),
            budget: self.budget,
            seed,
            holdout_fraction: self.tune_fraction,
        }
    }

    /// Path of the per-entry CSV.
    pub fn entries_path(&self) -> PathBuf {
        self.out.with_extension("entries.csv")
    }

    pub(crate) fn synthetic_spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            rank: self.rank,
            noise_sd: self.sigma,
            propensity: self.propensity,
            sample_count: self.sample_count,
            constant_theta: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        if self.dataset.needs_path() && self.path.is_none() {
            return bad(format!("dataset {} needs a path", self.dataset));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return bad(format!("eval_fraction {} outside (0, 1)", self.eval_fraction));
        }
        self.search_space(0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.dataset.is_synthetic() {
            self.synthetic_spec(0)
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.dataset == DatasetKind::SyntheticDist && self.sample_count < 2 {
            return bad("sample_count must be at least 2".into());
        }
        let metric = self.metric();
        for &m in &self.estimators {
            if m.is_distributional() && !self.dataset.is_distributional() {
                return bad(format!("{m} needs a distributional dataset"));
            }
            if !m.is_distributional() && metric == MetricKind::KsDistance {
                return bad(format!("{m} yields scalar estimates; use metric abs_error"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(m) = self.estimators.iter().find(|m| !seen.insert(**m)) {
            return bad(format!("estimator {m} listed twice"));
        }
        if self.dataset == DatasetKind::Movielens && self.eval_entries.is_some() {
            return bad("movielens uses its chronological split; eval_entries is not supported".into());
        }
        Ok(())
    }
}

/// Command-line overrides; `None` leaves the config value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// `kind` or `kind:path`.
    pub dataset: Option<String>,
    pub estimators: Vec<String>,
    pub sigma: Option<f64>,
    pub propensity: Option<f64>,
    pub n_rows: Option<usize>,
    pub n_cols: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub metric: Option<String>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut BenchConfig) -> Result<()> {
        if let Some(d) = &self.dataset {
            let (kind, path) = match d.split_once(':') {
                Some((k, p)) => (k, Some(PathBuf::from(p))),
                None => (d.as_str(), None),
            };
            config.dataset = kind.parse()?;
            if path.is_some() {
                config.path = path;
            }
        }
        if !self.estimators.is_empty() {
            config.estimators = self
                .estimators
                .iter()
                .map(|s| s.parse().map_err(|e: Error| Error::Config(e.to_string())))
                .collect::<Result<_>>()?;
        }
        if let Some(m) = &self.metric {
            config.metric = Some(m.parse()?);
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    config.$field = v.clone();
                }
            )*};
        }
        set!(sigma, propensity, n_rows, n_cols, trials, seed, out);
        Ok(())
    }
}
