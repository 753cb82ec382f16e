use thiserror::Error;

use crate::graph::Key;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the operation.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("variable {0} is missing")]
    MissingKey(Key),

    #[error("variable {key} has type {found}, expected {expected}")]
    TypeMismatch {
        key: Key,
        expected: &'static str,
        found: &'static str,
    },

    /// Manifold values of two different types were combined.
    #[error("manifold type mismatch: {expected} vs {found}")]
    ManifoldMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("factor {index} returned {found} rows, declared dimension is {expected}")]
    FactorDimension {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid loss function: {0}")]
    InvalidLoss(String),

    /// Cholesky met a pivot that is not positive. `column` is the scalar column in
    /// the unpermuted system; `key` is set when the column can be mapped to a variable.
    #[error("matrix is not positive definite at column {column}{}", key_suffix(.key))]
    NotPositiveDefinite { column: usize, key: Option<Key> },

    #[error("symbolic analysis does not match the matrix pattern")]
    PatternMismatch,

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: edge references unknown vertex {id}")]
    UnknownVertex { line: usize, id: u64 },

    #[error("cannot serialize: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn key_suffix(key: &Option<Key>) -> String {
    match key {
        Some(k) => format!(" (variable {k})"),
        None => String::new(),
    }
}
