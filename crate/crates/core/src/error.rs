// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the statistics, calibration and estimation routines.
///
/// Row, column, and time indices carried by variants are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input is empty")]
    Empty,
    #[error("row {row} has {found} columns, expected {expected}")]
    NonRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("order q must be an even integer >= 2; got {0}")]
    InvalidOrder(usize),
    #[error("interval [{s}, {e}] is not inside 1..={n}")]
    InvalidInterval { s: usize, e: usize, n: usize },
    #[error("split {k} is not admissible for [{s}, {m}]")]
    InvalidSplit { k: usize, s: usize, m: usize },
    #[error("interval of length {len} is too short; need at least {required}")]
    IntervalTooShort { len: usize, required: usize },
    #[error("order {c} exceeds the prefix-sum order {q}")]
    OrderExceedsQ { c: usize, q: usize },
    #[error("coordinate {l} is outside 1..={p}")]
    InvalidCoordinate { l: usize, p: usize },
    #[error("naive enumeration needs {tuples} tuples, budget is {budget}")]
    SizeGuard { tuples: f64, budget: f64 },
    #[error("self-normalizer is zero (data is constant on every candidate split)")]
    DegenerateNormalizer,
    #[error("projected work {projected:.3e} exceeds the budget {budget:.3e}")]
    BudgetExceeded { projected: f64, budget: f64 },
    #[error("null table has no draws")]
    EmptyTable,
    #[error("no p-value supplied for q = {0}")]
    MissingPValue(usize),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("no admissible interval of length > {min_len} inside [{s}, {e}]")]
    NoAdmissibleInterval { s: usize, e: usize, min_len: usize },
    #[error("no calibration table for q = {0}")]
    MissingCalibration(usize),
    #[error("segmentations have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("list is empty")]
    EmptyList,
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("change-point location {k} is invalid for n = {n}")]
    BadLocation { k: usize, n: usize },
    #[error("Bernoulli mean {value} at ({i}, {j}) is outside [0, 1]")]
    MeanOutOfRange { i: usize, j: usize, value: f64 },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("diagonal entry ({0}, {0}) is non-zero")]
    NonZeroDiagonal(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed null table: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format(err.to_string())
    }
}
