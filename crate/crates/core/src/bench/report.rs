//! Benchmark report: a JSON document of aggregates plus a flat per-entry
//! CSV. Everything that varies between identical runs lives in `run_info`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::BenchConfig;
use crate::error::Result;
use crate::method::Method;
use crate::tuning::Candidate;

/// One evaluated cell for one estimator in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub trial: usize,
    pub estimator: Method,
    pub row: usize,
    pub col: usize,
    /// Scalar truth; for distributional cells the mean of the reference
    /// measure.
    pub truth: f64,
    /// Scalar estimate, or the mean of the imputed measure.
    pub estimate: Option<f64>,
    pub error: Option<f64>,
    pub fallback_used: bool,
    pub neighbor_count: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub estimator: Method,
    pub tuned_params: Option<Candidate>,
    pub tune_score: Option<f64>,
    pub tune_failure: Option<String>,
    /// Mean over scored entries.
    pub mean_error: Option<f64>,
    pub std_error: Option<f64>,
    pub n_scored: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub data_seed: u64,
    pub split_seed: u64,
    pub tune_seed: u64,
    pub n_observed: usize,
    pub n_eval: usize,
    pub results: Vec<TrialResult>,
}

/// Across trials: mean and standard error of the per-trial means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: Method,
    pub mean_error: Option<f64>,
    pub std_error: Option<f64>,
    pub n_trials_scored: usize,
    pub n_failed_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub trial: usize,
    /// `tune` or `predict`.
    pub stage: &'static str,
    /// Estimators sharing the stage; scalar neighbor methods tune together.
    pub estimators: Vec<Method>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    /// Seconds since the Unix epoch at the start of the run.
    pub started_at: u64,
    pub elapsed_seconds: f64,
    pub timings: Vec<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub library_version: String,
    pub config: BenchConfig,
    pub metric: super::config::MetricKind,
    pub n_rows: usize,
    pub n_cols: usize,
    pub trials: Vec<TrialReport>,
    pub summary: Vec<EstimatorSummary>,
    /// Written to the CSV, not the JSON.
    #[serde(skip)]
    pub entries: Vec<EntryRecord>,
    pub run_info: RunInfo,
}

/// Mean and standard error (sample sd over sqrt(k)) of `xs`.
pub fn mean_and_std_error(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (Some(mean), Some((var / k).sqrt()))
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// JSON with `run_info` removed: identical configs give identical
    /// strings.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report is plain data");
        v.as_object_mut().expect("object").remove("run_info");
        serde_json::to_string_pretty(&v).expect("plain data")
    }

    pub fn write_entries_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.entries {
            w.serialize(e).map_err(std::io::Error::from)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the JSON report and the entry CSV next to it.
    pub fn write(&self, json_path: &Path, csv_path: &Path) -> Result<()> {
        for p in [json_path, csv_path] {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut json = BufWriter::new(File::create(json_path)?);
        json.write_all(self.to_json().as_bytes())?;
        json.write_all(b"\n")?;
        json.flush()?;
        self.write_entries_csv(BufWriter::new(File::create(csv_path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error() {
        assert_eq!(mean_and_std_error(&[]), (None, None));
        assert_eq!(mean_and_std_error(&[2.0]), (Some(2.0), None));
        let (m, se) = mean_and_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        // sample variance 5/3, over 4
        assert!((se.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
