use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("row {row} has zero l2 norm")]
    ZeroNormRow { row: usize },
    #[error("too few rows: need at least {needed}, got {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("row count mismatch: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },
    #[error("mixture component {component} is degenerate and regularization could not rescue it")]
    DegenerateComponent { component: usize },
    #[error("too few samples: each sample needs at least 2 values (got {n_a} and {n_b})")]
    TooFewSamples { n_a: usize, n_b: usize },
    #[error("both samples have zero variance and equal means")]
    ZeroVariance,
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDof(f64),
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("mutual-information bounds are degenerate: i_min = {i_min}, i_max = {i_max}")]
    DegenerateBounds { i_min: f64, i_max: f64 },
    #[error("invalid obfuscation spec: {0}")]
    BadSpec(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("empty input")]
    EmptyInput,
}
