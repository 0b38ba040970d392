//! Binary matrices and GF(2) polynomials used to pool clients into test groups.
//!
//! An [`AssignmentMatrix`] has one row per test group and one column per
//! client. Good assignment matrices come from parity-check matrices of cyclic
//! codes, which [`cyclic_parity_check`] builds from a generator polynomial.

mod matrix;
mod poly;
mod preset;
mod vectors;

pub use matrix::{cyclic_parity_check, privacy_level, syndrome, AssignmentMatrix, MAX_GROUPS};
pub use poly::Gf2Poly;
pub use preset::Preset;
pub use vectors::{DefectiveVector, SyndromeVector};

use thiserror::Error;

/// Largest number of groups for which [`privacy_level`] enumerates the row span.
pub const MAX_PRIVACY_ROWS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("assignment matrix has no rows")]
    NoRows,
    #[error("assignment matrix has no columns")]
    NoColumns,
    #[error("row {row} has length {len}, expected {expected}")]
    RaggedInput { row: usize, len: usize, expected: usize },
    #[error("group {0} contains no clients")]
    EmptyRow(usize),
    #[error("client {0} is not assigned to any group")]
    EmptyColumn(usize),
    #[error("{0} groups exceeds the supported maximum of {MAX_GROUPS}")]
    TooManyGroups(usize),
    #[error("entry {value} at row {row}, column {col} is not 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: String },
    #[error("generator does not divide x^{0} + 1")]
    NotADivisor(usize),
    #[error("generator of degree {degree} gives a degenerate code of length {n}")]
    DegenerateCode { n: usize, degree: usize },
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("row span of {0} rows is too large to enumerate (limit {MAX_PRIVACY_ROWS})")]
    RowSpanTooLarge(usize),
    #[error("malformed matrix file: {0}")]
    Parse(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}
