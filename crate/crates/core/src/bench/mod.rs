//! Reproducible benchmark runs over synthetic and real panels.
//!
//! Each trial hides a seeded evaluation split, tunes every estimator on the
//! remaining observed cells, imputes the split and scores it. Reports are a
//! JSON document of aggregates plus a flat per-entry CSV.

pub mod config;
pub mod metrics;
pub mod report;
mod run;

pub use config::{BenchConfig, DatasetKind, MetricKind, Overrides};
pub use report::{BenchReport, EntryRecord, EstimatorSummary, TrialReport, TrialResult};
pub use run::{run, run_to_files, trial_seeds};
