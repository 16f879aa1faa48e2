//! Gaussian node sets, Lagrange interpolation on them, and adaptive
//! Gauss-Kronrod integration.

mod interpolation;
mod kronrod;
mod nodes;

use thiserror::Error;

pub use interpolation::{input_grid, state_grid, InterpolationGrid};
pub use kronrod::{
    integrate_adaptive, integrate_adaptive_with_limit, kronrod15, Integral, DEFAULT_MAX_SPLITS, GAUSS_WEIGHTS,
    KRONROD_NODES, KRONROD_WEIGHTS,
};
pub use nodes::{legendre, lgl_nodes, lgr_nodes, NodeKind, NodeSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("{kind} node count {count} is below the minimum {min}")]
    InvalidCount { kind: &'static str, count: usize, min: usize },
    #[error("interpolation points must be distinct ({0} repeated)")]
    DuplicatePoint(f64),
    #[error("expected {expected} sample values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("integration interval [{a}, {b}] is empty")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand returned a non-finite value")]
    NonFinite,
    #[error("adaptive quadrature did not converge after {splits} splits (error estimate {error:e})")]
    NoConvergence { splits: usize, error: f64 },
}
