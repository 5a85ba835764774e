//! Minkowski gauges, discrete Legendre–Fenchel conjugation, and the
//! subadditive-limit utilities.

mod body;
mod conjugate;
mod grid;
mod sequences;

pub use body::{ConvexBody, Polytope, BOUNDARY_TOL};
pub use conjugate::{auto_dual_grid, biconjugate, legendre_transform, legendre_transform_direct, Biconjugate};
pub use grid::{Axis, Grid, GridFunction};
pub use sequences::{
    fekete_limit, largest_term, FeketeReport, LargestTermReport, LargestTermRow, SubadditivityViolation,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvexError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid convex body: {0}")]
    InvalidBody(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("function is +inf at every node")]
    AllInfinite,
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for ConvexError {
    fn from(e: csv::Error) -> Self {
        ConvexError::Csv(e.to_string())
    }
}
