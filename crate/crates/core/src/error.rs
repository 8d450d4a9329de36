use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix has no observed entry")]
    AllMissing,
    #[error("entry ({row}, {col}) is outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("kernel bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("empty measure")]
    EmptyMeasure,
    #[error("weights have zero total mass")]
    ZeroTotalWeight,
    #[error("no observed donor for entry ({row}, {col})")]
    NoObservedDonor { row: usize, col: usize },
    #[error("noise variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("dissimilarity profile has no defined value")]
    NoDefinedDistances,
    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,
    #[error("search space is empty")]
    EmptySearchSpace,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate entry ({row_id}, {col_id}) on lines {first_line} and {second_line}")]
    DuplicateEntry {
        row_id: String,
        col_id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("rating {rating} on line {line} is outside 1..=5")]
    RatingOutOfRange { line: usize, rating: i64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
