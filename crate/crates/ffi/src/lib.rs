//! C ABI over the scalar side of `nncomplete`.
//!
//! Matrices cross the boundary as an opaque [`NncMatrix`] handle. Every
//! fallible call returns an [`NncStatus`]; on failure a message is
//! available from [`nnc_last_error`] on the same thread. Dense buffers are
//! row-major `n_rows * n_cols` arrays owned by the caller.
//!
//! Distributional panels are not exposed here.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nncomplete::baselines::SpectralParams;
use nncomplete::data::{gen_synthetic_scalar, load_long_csv, SyntheticSpec};
use nncomplete::estimators::{ScalarHyperParams, Threshold};
use nncomplete::tuning::{self, Candidate, Predictor, SearchSpace};
use nncomplete::{EntryIndex, Error, MaskedMatrix, Method};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    IndexOutOfRange = 4,
    AllMissing = 5,
    /// No donor could be found for a target entry.
    NoDonor = 6,
    Parse = 7,
    Io = 8,
    NoConvergence = 9,
    /// A Rust panic was caught at the boundary.
    Panic = 10,
}

/// Scalar estimators reachable from C.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NncMethod {
    Rownn = 0,
    Colnn = 1,
    Tsnn = 2,
    Drnn = 3,
    Autonn = 4,
    Awnn = 5,
    Usvt = 6,
    Softimpute = 7,
}

impl From<NncMethod> for Method {
    fn from(m: NncMethod) -> Self {
        match m {
            NncMethod::Rownn => Method::RowNN,
            NncMethod::Colnn => Method::ColNN,
            NncMethod::Tsnn => Method::TSNN,
            NncMethod::Drnn => Method::DRNN,
            NncMethod::Autonn => Method::AutoNN,
            NncMethod::Awnn => Method::AWNN,
            NncMethod::Usvt => Method::USVT,
            NncMethod::Softimpute => Method::SoftImpute,
        }
    }
}

/// Hyperparameters for every method; each method reads the fields it uses.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NncParams {
    pub eta_row: f64,
    /// `eta_row` is a percentile in [0, 100] rather than a distance.
    pub eta_row_is_percentile: bool,
    pub eta_col: f64,
    pub eta_col_is_percentile: bool,
    pub alpha: f64,
    /// AWNN regularization; zero or NaN selects the default.
    pub awnn_reg: f64,
    pub usvt_eta: f64,
    pub si_lambda: f64,
    pub si_max_iter: usize,
    pub si_tol: f64,
}

fn threshold(v: f64, percentile: bool) -> Threshold {
    if percentile {
        Threshold::Percentile(v)
    } else {
        Threshold::Absolute(v)
    }
}

fn unthreshold(t: Threshold) -> (f64, bool) {
    match t {
        Threshold::Percentile(q) => (q, true),
        Threshold::Absolute(v) => (v, false),
    }
}

impl NncParams {
    fn candidate(&self, method: Method) -> Candidate {
        match method {
            Method::USVT | Method::SoftImpute => Candidate::Spectral(SpectralParams {
                usvt_eta: self.usvt_eta,
                si_lambda: self.si_lambda,
                si_max_iter: self.si_max_iter,
                si_tol: self.si_tol,
            }),
            _ => Candidate::Neighbors(ScalarHyperParams {
                eta_row: threshold(self.eta_row, self.eta_row_is_percentile),
                eta_col: threshold(self.eta_col, self.eta_col_is_percentile),
                alpha: self.alpha,
                awnn_reg: (self.awnn_reg > 0.0).then_some(self.awnn_reg),
            }),
        }
    }

    fn absorb(&mut self, c: &Candidate) {
        match c {
            Candidate::Neighbors(p) => {
                (self.eta_row, self.eta_row_is_percentile) = unthreshold(p.eta_row);
                (self.eta_col, self.eta_col_is_percentile) = unthreshold(p.eta_col);
                self.alpha = p.alpha;
                self.awnn_reg = p.awnn_reg.unwrap_or(0.0);
            }
            Candidate::Spectral(p) => {
                self.usvt_eta = p.usvt_eta;
                self.si_lambda = p.si_lambda;
                self.si_max_iter = p.si_max_iter;
                self.si_tol = p.si_tol;
            }
        }
    }
}

impl Default for NncParams {
    fn default() -> Self {
        let mut p = NncParams {
            eta_row: 0.0,
            eta_row_is_percentile: false,
            eta_col: 0.0,
            eta_col_is_percentile: false,
            alpha: 0.0,
            awnn_reg: 0.0,
            usvt_eta: 0.0,
            si_lambda: 0.0,
            si_max_iter: 0,
            si_tol: 0.0,
        };
        p.absorb(&Candidate::Neighbors(ScalarHyperParams::default()));
        p.absorb(&Candidate::Spectral(SpectralParams::default()));
        p
    }
}

/// Opaque scalar panel with a missingness mask.
pub struct NncMatrix {
    inner: MaskedMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    // interior NULs would truncate the message; drop them
    let clean = CString::new(msg.replace('\0', "")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(e: &Error) -> NncStatus {
    match e {
        Error::DimensionMismatch { .. } => NncStatus::DimensionMismatch,
        Error::AllMissing => NncStatus::AllMissing,
        Error::IndexOutOfRange { .. } => NncStatus::IndexOutOfRange,
        Error::NoObservedDonor { .. } | Error::NoDefinedDistances | Error::ZeroTotalWeight => NncStatus::NoDonor,
        Error::Parse { .. } | Error::DuplicateEntry { .. } | Error::RatingOutOfRange { .. } => NncStatus::Parse,
        Error::Io(_) => NncStatus::Io,
        Error::SvdNoConvergence => NncStatus::NoConvergence,
        Error::NonPositiveBandwidth(_)
        | Error::TooFewSamples { .. }
        | Error::EmptySample
        | Error::EmptyMeasure
        | Error::NonPositiveVariance(_)
        | Error::EmptySearchSpace
        | Error::InvalidParameter(_)
        | Error::Config(_) => NncStatus::InvalidArgument,
    }
}

struct Fail(NncStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NncStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording any failure (including a panic) for
/// [`nnc_last_error`].
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> NncStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(Fail(NncStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            set_last_error("");
            NncStatus::Ok
        }
        Err(Fail(status, msg)) => {
            set_last_error(&msg);
            status
        }
    }
}

unsafe fn matrix_ref<'a>(m: *const NncMatrix) -> Result<&'a MaskedMatrix, Fail> {
    m.as_ref().map(|h| &h.inner).ok_or_else(|| null("matrix"))
}

fn boxed(m: MaskedMatrix) -> *mut NncMatrix {
    Box::into_raw(Box::new(NncMatrix { inner: m }))
}

fn cells(n_rows: usize, n_cols: usize) -> Result<usize, Fail> {
    n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| Fail(NncStatus::InvalidArgument, "dimensions overflow".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nnc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn nnc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default hyperparameters.
#[no_mangle]
pub extern "C" fn nnc_params_default() -> NncParams {
    NncParams::default()
}

/// Builds a matrix from row-major `values` and `mask` (nonzero means
/// observed). Values under a zero mask are ignored and may be NaN.
///
/// # Safety
/// `values` and `mask` must point to `n_rows * n_cols` readable elements and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nnc_matrix_new(
    n_rows: usize,
    n_cols: usize,
    values: *const f64,
    mask: *const u8,
    out: *mut *mut NncMatrix,
) -> NncStatus {
    guard(|| {
        if values.is_null() || mask.is_null() || out.is_null() {
            return Err(null("values, mask or out"));
        }
        let len = cells(n_rows, n_cols)?;
        let values = std::slice::from_raw_parts(values, len).to_vec();
        let mask = std::slice::from_raw_parts(mask, len).iter().map(|&b| b != 0).collect();
        let m = MaskedMatrix::from_vecs(n_rows, n_cols, values, mask)?;
        *out = boxed(m);
        Ok(())
    })
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nnc_matrix_free(m: *mut NncMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `n_rows`, `n_cols` and `n_observed` must be
/// writable or null.
#[no_mangle]
pub unsafe extern "C" fn nnc_matrix_dims(
    m: *const NncMatrix,
    n_rows: *mut usize,
    n_cols: *mut usize,
    n_observed: *mut usize,
) -> NncStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        for (p, v) in [(n_rows, m.n_rows()), (n_cols, m.n_cols()), (n_observed, m.n_observed())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies values and mask out row-major; masked cells read as NaN.
///
/// # Safety
/// `values` and `mask` must each be null or hold `n_rows * n_cols` writable
/// elements.
#[no_mangle]
pub unsafe extern "C" fn nnc_matrix_copy_out(m: *const NncMatrix, values: *mut f64, mask: *mut u8) -> NncStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        let len = m.n_rows() * m.n_cols();
        if !values.is_null() {
            let out = std::slice::from_raw_parts_mut(values, len);
            for (o, v) in out.iter_mut().zip(m.raw_values().iter()) {
                *o = *v;
            }
        }
        if !mask.is_null() {
            let out = std::slice::from_raw_parts_mut(mask, len);
            for (o, &b) in out.iter_mut().zip(m.mask().iter()) {
                *o = u8::from(b);
            }
        }
        Ok(())
    })
}

/// Loads a `row_id,col_id,value` CSV. Rows and columns are numbered in order
/// of first appearance.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nnc_matrix_load_long_csv(path: *const c_char, out: *mut *mut NncMatrix) -> NncStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(null("path or out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(NncStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let labeled = load_long_csv(path)?;
        *out = boxed(labeled.matrix);
        Ok(())
    })
}

/// Draws a synthetic low-rank panel. When `theta` is non-null the noiseless
/// signal is written to it row-major.
///
/// # Safety
/// `out` must be writable; `theta` must be null or hold `n_rows * n_cols`
/// writable elements.
#[no_mangle]
pub unsafe extern "C" fn nnc_generate_scalar(
    n_rows: usize,
    n_cols: usize,
    rank: usize,
    noise_sd: f64,
    propensity: f64,
    seed: u64,
    out: *mut *mut NncMatrix,
    theta: *mut f64,
) -> NncStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = gen_synthetic_scalar(&SyntheticSpec {
            n_rows,
            n_cols,
            rank,
            noise_sd,
            propensity,
            seed,
            ..SyntheticSpec::default()
        })?;
        if !theta.is_null() {
            let dst = std::slice::from_raw_parts_mut(theta, n_rows * n_cols);
            for (d, v) in dst.iter_mut().zip(g.theta.iter()) {
                *d = *v;
            }
        }
        *out = boxed(g.matrix);
        Ok(())
    })
}

/// Imputes one entry. `fallback_used` and `neighbor_count` may be null.
///
/// # Safety
/// `m` must be a live handle, `params` readable and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn nnc_impute(
    m: *const NncMatrix,
    method: NncMethod,
    params: *const NncParams,
    row: usize,
    col: usize,
    value: *mut f64,
    fallback_used: *mut bool,
    neighbor_count: *mut usize,
) -> NncStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        let method = Method::from(method);
        let est = tuning::predict(m, method, &params.candidate(method), &[EntryIndex::new(row, col)])?
            .pop()
            .expect("one target")?;
        *value = est.value;
        if !fallback_used.is_null() {
            *fallback_used = est.fallback_used;
        }
        if !neighbor_count.is_null() {
            *neighbor_count = est.neighbor_count;
        }
        Ok(())
    })
}

/// Fills `out` (row-major, `n_rows * n_cols`) with observed values and
/// imputes every missing cell. Cells that cannot be imputed are set to NaN
/// and counted in `n_failed` (which may be null); they do not fail the call.
///
/// # Safety
/// `m` must be a live handle, `params` readable and `out` hold
/// `n_rows * n_cols` writable elements.
#[no_mangle]
pub unsafe extern "C" fn nnc_complete(
    m: *const NncMatrix,
    method: NncMethod,
    params: *const NncParams,
    out: *mut f64,
    n_failed: *mut usize,
) -> NncStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (n, t) = (m.n_rows(), m.n_cols());
        let missing: Vec<EntryIndex> = (0..n)
            .flat_map(|r| (0..t).map(move |c| EntryIndex::new(r, c)))
            .filter(|e| !m.mask()[[e.row, e.col]])
            .collect();
        let method = Method::from(method);
        let estimates = Predictor::new(m).predict(method, &params.candidate(method), &missing)?;
        let dst = std::slice::from_raw_parts_mut(out, n * t);
        for (d, v) in dst.iter_mut().zip(m.raw_values().iter()) {
            *d = *v;
        }
        let mut failed = 0;
        for (e, est) in missing.iter().zip(estimates) {
            dst[e.row * t + e.col] = match est {
                Ok(est) => est.value,
                Err(_) => {
                    failed += 1;
                    f64::NAN
                }
            };
        }
        if !n_failed.is_null() {
            *n_failed = failed;
        }
        Ok(())
    })
}

/// Tunes `method` on a seeded holdout of the observed cells with the default
/// grids. `best` receives the defaults overwritten by the tuned values;
/// `score` (may be null) the holdout mean absolute error.
///
/// # Safety
/// `m` must be a live handle and `best` writable.
#[no_mangle]
pub unsafe extern "C" fn nnc_tune(
    m: *const NncMatrix,
    method: NncMethod,
    seed: u64,
    best: *mut NncParams,
    score: *mut f64,
) -> NncStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        if best.is_null() {
            return Err(null("best"));
        }
        let space = SearchSpace {
            seed,
            ..SearchSpace::default()
        };
        let result = tuning::tune(m, Method::from(method), &space)?;
        let mut p = NncParams::default();
        p.absorb(&result.best_params);
        *best = p;
        if !score.is_null() {
            *score = result.best_score;
        }
        Ok(())
    })
}
