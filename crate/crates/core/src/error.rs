use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid norm order {0}: q must be >= 1 or infinity")]
    InvalidNormOrder(f64),

    #[error("operation requires a finite norm order q > 1, got q = {0}")]
    UnsupportedNormOrder(String),

    #[error("non-finite coordinate {value} at index {index}")]
    NonFiniteCoordinate { index: usize, value: f64 },

    #[error("point must have dimension >= 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("instance has no points")]
    EmptyInstance,

    #[error("invalid weight {value} at index {index}: weights must be finite and > 0")]
    InvalidWeight { index: usize, value: f64 },

    #[error("weights length {weights} does not match number of points {points}")]
    WeightCount { points: usize, weights: usize },

    #[error("index {index} out of range for instance with {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("construction infeasible: {0}")]
    Infeasible(String),

    #[error("median validation failed: {0}")]
    MedianValidation(String),

    #[error("grid oracle supports d <= {max}, got d = {d}")]
    DimensionTooLarge { d: usize, max: usize },

    #[error("grid oracle: {0}")]
    BadGrid(String),

    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    NoBracket { lo: f64, hi: f64 },

    #[error("instance file version error: {0}")]
    Version(String),

    #[error("malformed instance file: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
