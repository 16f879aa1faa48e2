//! Transcription of a dynamic optimization problem into a finite NLP by
//! LGR collocation on a (possibly flexible) mesh of sub-intervals.

mod assemble;
mod dop;
mod layout;
mod mesh;
mod trajectory;

use thiserror::Error;

use crate::quadrature::QuadratureError;

pub use assemble::{assemble, bernstein_transfer_matrix, AssembledProblem};
pub use dop::{
    reduce_path_constraint, BoundaryConditions, BoundaryCost, DopDefinition, DynamicsResidual, PathFunction,
    RunningCost, UNBOUNDED,
};
pub use layout::DecisionLayout;
pub use mesh::{ConstraintMode, FlexibleMesh, MIN_LENGTH_FRACTION};
pub use trajectory::{extract_trajectory, Trajectory, TrajectoryData, TrajectorySample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranscriptionError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("inconsistent bounds: {0}")]
    Bounds(String),
    #[error("collocation degree must be at least 1")]
    Degree,
    #[error("interval [{0}, {1}] is degenerate")]
    DegenerateInterval(f64, f64),
    #[error("singular interpolation matrix")]
    Singular,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Affine map from `tau` in `[-1, 1]` to `[t_prev, t_cur]`.
pub fn gamma(tau: f64, t_prev: f64, t_cur: f64) -> Result<f64, TranscriptionError> {
    if !(t_prev < t_cur) {
        return Err(TranscriptionError::DegenerateInterval(t_prev, t_cur));
    }
    Ok(0.5 * (1.0 - tau) * t_prev + 0.5 * (1.0 + tau) * t_cur)
}

/// Inverse of [`gamma`] without the range check.
pub fn gamma_inv(t: f64, t_prev: f64, t_cur: f64) -> f64 {
    (2.0 * t - t_prev - t_cur) / (t_cur - t_prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(-1.0, 0.3, 0.9).unwrap(), 0.3);
        assert_eq!(gamma(1.0, 0.3, 0.9).unwrap(), 0.9);
        assert_eq!(gamma(0.0, 0.0, 4.0).unwrap(), 2.0);
        assert!(gamma(0.0, 1.0, 1.0).is_err());
        assert_eq!(gamma_inv(2.0, 0.0, 4.0), 0.0);
    }
}
