//! Thresholded scalar nearest neighbors.

use serde::{Deserialize, Serialize};

use super::{Estimate, ScalarHyperParams, Threshold};
use crate::error::{Error, Result};
use crate::framework::{dissimilarity_profile, DissimilarityProfile, PairwiseTable, SquaredDifference};
use crate::matrix::{Axis, EntryIndex, MaskedMatrix, Panel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMethod {
    RowNN,
    ColNN,
    TSNN,
    DRNN,
    AutoNN,
}

/// A matrix prepared for repeated imputation. Small and medium panels get
/// both pairwise tables up front, after which a target's profiles cost
/// O(N + T); panels too large to tabulate fall back to direct profiles,
/// which are bitwise identical but cost O(N·T) per target.
#[derive(Debug, Clone)]
pub struct ScalarModel {
    m: MaskedMatrix,
    tables: Option<(PairwiseTable, PairwiseTable)>,
}

/// Largest `N²·T + T²·N` for which [`ScalarModel::new`] builds tables.
pub const TABLE_WORK_LIMIT: usize = 1 << 31;

impl ScalarModel {
    pub fn new(m: MaskedMatrix) -> Self {
        let (n, t) = (m.n_rows(), m.n_cols());
        let work = n
            .saturating_mul(n)
            .saturating_mul(t)
            .saturating_add(t.saturating_mul(t).saturating_mul(n));
        if work <= TABLE_WORK_LIMIT {
            Self::tabulated(m)
        } else {
            Self::direct(m)
        }
    }

    pub fn tabulated(m: MaskedMatrix) -> Self {
        let rows = PairwiseTable::from_metric(&m, &SquaredDifference, Axis::Row);
        let cols = PairwiseTable::from_metric(&m, &SquaredDifference, Axis::Col);
        Self {
            m,
            tables: Some((rows, cols)),
        }
    }

    pub fn direct(m: MaskedMatrix) -> Self {
        Self { m, tables: None }
    }

    pub fn matrix(&self) -> &MaskedMatrix {
        &self.m
    }

    /// Row profile of `target.row`, excluding column `target.col`.
    pub fn row_profile(&self, target: EntryIndex) -> DissimilarityProfile {
        match &self.tables {
            Some((rows, _)) => rows.profile_with_metric(&self.m, &SquaredDifference, target.row, target.col),
            None => dissimilarity_profile(&self.m, &SquaredDifference, Axis::Row, target.row, target.col),
        }
    }

    /// Column profile of `target.col`, excluding row `target.row`.
    pub fn col_profile(&self, target: EntryIndex) -> DissimilarityProfile {
        match &self.tables {
            Some((_, cols)) => cols.profile_with_metric(&self.m, &SquaredDifference, target.col, target.row),
            None => dissimilarity_profile(&self.m, &SquaredDifference, Axis::Col, target.col, target.row),
        }
    }

    pub fn neighborhoods(&self, target: EntryIndex) -> Result<Neighborhoods<'_>> {
        self.m.check_index(target)?;
        Ok(Neighborhoods::from_profiles(
            &self.m,
            target,
            &self.row_profile(target),
            &self.col_profile(target),
        ))
    }

    pub fn impute(&self, target: EntryIndex, method: ScalarMethod, params: &ScalarHyperParams) -> Result<Estimate> {
        params.validate()?;
        self.neighborhoods(target)?.estimate(method, params)
    }
}

/// Everything the thresholded estimators need for one target.
///
/// Candidate rows and columns are sorted by dissimilarity, so every
/// threshold selects a prefix. Prefix sums over the target column (for
/// RowNN), the target row (for ColNN) and a lazily grown 2-D cumulative
/// table over `[i] ++ rows` × `[t] ++ cols` (for TSNN) make each estimate
/// O(1) once the table covers the requested extent.
#[derive(Debug, Clone)]
pub struct Neighborhoods<'a> {
    m: &'a MaskedMatrix,
    target: EntryIndex,
    rows: Vec<(f64, usize)>,
    cols: Vec<(f64, usize)>,
    row_vals: Vec<f64>,
    col_vals: Vec<f64>,
    row_prefix: Vec<(f64, u32)>,
    col_prefix: Vec<(f64, u32)>,
    // position in `rows` (resp. `cols`) of the nearest donor observed in the
    // target column (resp. row)
    row_donor: Option<usize>,
    col_donor: Option<usize>,
    block: Block,
}

#[derive(Debug, Clone, Default)]
struct Block {
    // (1 + rows) x (1 + cols) extent currently covered
    er: usize,
    ec: usize,
    // (er + 1) x (ec + 1) cumulative sums and counts, origin row/col zero
    sums: Vec<f64>,
    counts: Vec<u32>,
}

fn prefix(values: impl Iterator<Item = Option<f64>>) -> Vec<(f64, u32)> {
    let mut out = vec![(0.0, 0u32)];
    let (mut s, mut c) = (0.0, 0u32);
    for v in values {
        if let Some(z) = v {
            s += z;
            c += 1;
        }
        out.push((s, c));
    }
    out
}

impl<'a> Neighborhoods<'a> {
    /// `row_profile` must be the row profile of `target.row` excluding
    /// `target.col` and `col_profile` the column profile of `target.col`
    /// excluding `target.row`.
    pub fn from_profiles(
        m: &'a MaskedMatrix,
        target: EntryIndex,
        row_profile: &DissimilarityProfile,
        col_profile: &DissimilarityProfile,
    ) -> Self {
        let rows = row_profile.sorted_defined();
        let cols = col_profile.sorted_defined();
        let (i, t) = (target.row, target.col);
        let row_prefix = prefix(rows.iter().map(|&(_, j)| m.get(j, t)));
        let col_prefix = prefix(cols.iter().map(|&(_, s)| m.get(i, s)));
        let row_donor = rows.iter().position(|&(_, j)| m.is_observed(j, t));
        let col_donor = cols.iter().position(|&(_, s)| m.is_observed(i, s));
        Self {
            m,
            target,
            row_vals: rows.iter().map(|x| x.0).collect(),
            col_vals: cols.iter().map(|x| x.0).collect(),
            rows,
            cols,
            row_prefix,
            col_prefix,
            row_donor,
            col_donor,
            block: Block::default(),
        }
    }

    pub fn target(&self) -> EntryIndex {
        self.target
    }

    /// Candidate rows ordered by dissimilarity (undefined ones omitted).
    pub fn sorted_rows(&self) -> &[(f64, usize)] {
        &self.rows
    }

    pub fn sorted_cols(&self) -> &[(f64, usize)] {
        &self.cols
    }

    /// Number of candidate rows within `eta`.
    pub fn row_count(&self, eta: Threshold) -> usize {
        within(&self.row_vals, eta)
    }

    pub fn col_count(&self, eta: Threshold) -> usize {
        within(&self.col_vals, eta)
    }

    fn row_fallback(&self) -> Option<Estimate> {
        self.row_donor.map(|p| Estimate {
            value: self.m.get(self.rows[p].1, self.target.col).expect("donor is observed"),
            fallback_used: true,
            neighbor_count: 1,
        })
    }

    fn col_fallback(&self) -> Option<Estimate> {
        self.col_donor.map(|p| Estimate {
            value: self.m.get(self.target.row, self.cols[p].1).expect("donor is observed"),
            fallback_used: true,
            neighbor_count: 1,
        })
    }

    fn no_donor(&self) -> Error {
        Error::NoObservedDonor {
            row: self.target.row,
            col: self.target.col,
        }
    }

    /// RowNN over the `k` nearest candidate rows.
    pub fn rownn_k(&self, k: usize) -> Result<Estimate> {
        let (sum, count) = self.row_prefix[k.min(self.rows.len())];
        if count > 0 {
            return Ok(Estimate {
                value: sum / count as f64,
                fallback_used: false,
                neighbor_count: count as usize,
            });
        }
        self.row_fallback().ok_or_else(|| self.no_donor())
    }

    pub fn colnn_k(&self, k: usize) -> Result<Estimate> {
        let (sum, count) = self.col_prefix[k.min(self.cols.len())];
        if count > 0 {
            return Ok(Estimate {
                value: sum / count as f64,
                fallback_used: false,
                neighbor_count: count as usize,
            });
        }
        self.col_fallback().ok_or_else(|| self.no_donor())
    }

    /// Grows the TSNN table to cover `kr` rows and `kc` columns besides
    /// the target's own. Call once with the largest extent before a sweep.
    pub fn reserve(&mut self, kr: usize, kc: usize) {
        let er = 1 + kr.min(self.rows.len());
        let ec = 1 + kc.min(self.cols.len());
        if er <= self.block.er && ec <= self.block.ec {
            return;
        }
        let er = er.max(self.block.er);
        let ec = ec.max(self.block.ec);
        let (i, t) = (self.target.row, self.target.col);
        let row_order: Vec<usize> = std::iter::once(i)
            .chain(self.rows[..er - 1].iter().map(|x| x.1))
            .collect();
        let col_order: Vec<usize> = std::iter::once(t)
            .chain(self.cols[..ec - 1].iter().map(|x| x.1))
            .collect();
        let w = ec + 1;
        let mut sums = vec![0.0; (er + 1) * w];
        let mut counts = vec![0u32; (er + 1) * w];
        let values = self.m.raw_values();
        let mask = self.m.mask();
        for (a, &j) in row_order.iter().enumerate() {
            let (mut rs, mut rc) = (0.0, 0u32);
            for (b, &s) in col_order.iter().enumerate() {
                // the target cell never contributes
                if mask[[j, s]] && !(a == 0 && b == 0) {
                    rs += values[[j, s]];
                    rc += 1;
                }
                sums[(a + 1) * w + b + 1] = sums[a * w + b + 1] + rs;
                counts[(a + 1) * w + b + 1] = counts[a * w + b + 1] + rc;
            }
        }
        self.block = Block { er, ec, sums, counts };
    }

    /// TSNN without fallback: `None` if the product neighborhood holds no
    /// observed cell other than the target.
    pub fn tsnn_strict_k(&mut self, kr: usize, kc: usize) -> Option<Estimate> {
        let kr = kr.min(self.rows.len());
        let kc = kc.min(self.cols.len());
        self.reserve(kr, kc);
        let k = (kr + 1) * (self.block.ec + 1) + kc + 1;
        let (sum, count) = (self.block.sums[k], self.block.counts[k]);
        (count > 0).then(|| Estimate {
            value: sum / count as f64,
            fallback_used: false,
            neighbor_count: count as usize,
        })
    }

    pub fn tsnn_k(&mut self, kr: usize, kc: usize) -> Result<Estimate> {
        if let Some(e) = self.tsnn_strict_k(kr, kc) {
            return Ok(e);
        }
        self.row_fallback()
            .or_else(|| self.col_fallback())
            .ok_or_else(|| self.no_donor())
    }

    pub fn drnn_k(&mut self, kr: usize, kc: usize) -> Result<Estimate> {
        let row = self.rownn_k(kr)?;
        let col = self.colnn_k(kc)?;
        Ok(match self.tsnn_strict_k(kr, kc) {
            Some(ts) => Estimate {
                value: row.value + col.value - ts.value,
                fallback_used: row.fallback_used || col.fallback_used,
                neighbor_count: ts.neighbor_count,
            },
            None => Estimate {
                value: 0.5 * (row.value + col.value),
                fallback_used: true,
                neighbor_count: row.neighbor_count + col.neighbor_count,
            },
        })
    }

    pub fn autonn_k(&mut self, kr: usize, kc: usize, alpha: f64) -> Result<Estimate> {
        let dr = self.drnn_k(kr, kc)?;
        let ts = self.tsnn_k(kr, kc)?;
        Ok(Estimate {
            value: alpha * dr.value + (1.0 - alpha) * ts.value,
            fallback_used: dr.fallback_used || ts.fallback_used,
            neighbor_count: dr.neighbor_count.max(ts.neighbor_count),
        })
    }

    pub fn estimate(&mut self, method: ScalarMethod, params: &ScalarHyperParams) -> Result<Estimate> {
        let kr = self.row_count(params.eta_row);
        let kc = self.col_count(params.eta_col);
        match method {
            ScalarMethod::RowNN => self.rownn_k(kr),
            ScalarMethod::ColNN => self.colnn_k(kc),
            ScalarMethod::TSNN => self.tsnn_k(kr, kc),
            ScalarMethod::DRNN => self.drnn_k(kr, kc),
            ScalarMethod::AutoNN => self.autonn_k(kr, kc, params.alpha),
        }
    }
}

fn within(sorted: &[f64], eta: Threshold) -> usize {
    match eta.resolve(sorted) {
        Some(r) => sorted.partition_point(|&v| v <= r),
        None => 0,
    }
}

fn direct(m: &MaskedMatrix, target: EntryIndex) -> Result<Neighborhoods<'_>> {
    m.check_index(target)?;
    let rp = dissimilarity_profile(m, &SquaredDifference, Axis::Row, target.row, target.col);
    let cp = dissimilarity_profile(m, &SquaredDifference, Axis::Col, target.col, target.row);
    Ok(Neighborhoods::from_profiles(m, target, &rp, &cp))
}

fn params(eta_row: Threshold, eta_col: Threshold, alpha: f64) -> Result<ScalarHyperParams> {
    let p = ScalarHyperParams {
        eta_row,
        eta_col,
        alpha,
        awnn_reg: None,
    };
    p.validate()?;
    Ok(p)
}

pub fn impute_rownn(m: &MaskedMatrix, target: EntryIndex, eta1: Threshold) -> Result<Estimate> {
    let p = params(eta1, Threshold::Absolute(0.0), 0.0)?;
    direct(m, target)?.estimate(ScalarMethod::RowNN, &p)
}

pub fn impute_colnn(m: &MaskedMatrix, target: EntryIndex, eta2: Threshold) -> Result<Estimate> {
    let p = params(Threshold::Absolute(0.0), eta2, 0.0)?;
    direct(m, target)?.estimate(ScalarMethod::ColNN, &p)
}

pub fn impute_tsnn(m: &MaskedMatrix, target: EntryIndex, eta1: Threshold, eta2: Threshold) -> Result<Estimate> {
    let p = params(eta1, eta2, 0.0)?;
    direct(m, target)?.estimate(ScalarMethod::TSNN, &p)
}

pub fn impute_drnn(m: &MaskedMatrix, target: EntryIndex, eta1: Threshold, eta2: Threshold) -> Result<Estimate> {
    let p = params(eta1, eta2, 1.0)?;
    direct(m, target)?.estimate(ScalarMethod::DRNN, &p)
}

pub fn impute_autonn(
    m: &MaskedMatrix,
    target: EntryIndex,
    eta1: Threshold,
    eta2: Threshold,
    alpha: f64,
) -> Result<Estimate> {
    let p = params(eta1, eta2, alpha)?;
    direct(m, target)?.estimate(ScalarMethod::AutoNN, &p)
}
