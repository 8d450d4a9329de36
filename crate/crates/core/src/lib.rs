//! Nearest-neighbor matrix completion for scalar and distributional panels.
//!
//! A [`MaskedMatrix`] (or [`DistMatrix`]) holds a partially observed panel.
//! Estimators in [`estimators`] fill individual entries, [`tuning`] picks
//! their thresholds on held-out observed cells, [`baselines`] provides the
//! spectral comparators, [`data`] generates and loads panels, and [`bench`]
//! ties everything into reproducible benchmark runs.

// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod data;
pub mod error;
pub mod estimators;
pub mod framework;
pub mod matrix;
pub mod method;
pub mod tuning;

pub use error::{Error, Result};
pub use matrix::{Axis, DistMatrix, EntryIndex, MaskedMatrix, Panel, MASKED};
pub use method::Method;
