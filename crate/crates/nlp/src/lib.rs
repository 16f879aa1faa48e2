//! Dense nonlinear programming for desk-scale transcribed optimal control
//! problems: forward-mode dual numbers, a Goldfarb-Idnani QP solver and an
//! SQP driver with damped BFGS updates.

pub mod derivatives;
pub mod dual;
pub mod problem;
pub mod qp;
pub mod sqp;

use thiserror::Error;

pub use derivatives::{derivative_mismatch, gradient, jacobian, Differentiation};
pub use dual::Dual;
pub use problem::{is_finite_bound, LinearConstraints, NlpProblem, INFINITE_BOUND};
pub use sqp::{solve, MeritStep, NlpSolution, SolveStatus, SolverOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlpError {
    #[error("callback returned a non-finite value: {0}")]
    NonFinite(String),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("QP subproblem failed: {0}")]
    QpFailure(String),
}
