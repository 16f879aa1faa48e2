//! Solution-quality metrics of a trajectory: cost, L2 inequality
//! violation, and average L2 dynamics residual, all by adaptive quadrature.

use flexcolloc_nlp::is_finite_bound;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate_adaptive, QuadratureError};
use crate::transcription::{DopDefinition, Trajectory};

/// Interval endpoints are pulled inward by this fraction of the interval
/// so derivatives are never taken exactly at a breakpoint.
pub const ENDPOINT_NUDGE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssessmentError {
    #[error("trajectory has {traj} states and {traj_u} inputs, problem has {n_x} and {n_u}")]
    Dimension { traj: usize, traj_u: usize, n_x: usize, n_u: usize },
    #[error("quadrature failed on interval {interval}: {source}")]
    Quadrature { interval: usize, source: QuadratureError },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessTolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for AssessTolerances {
    fn default() -> Self {
        Self { rel: 1e-10, abs: 1e-12 }
    }
}

/// Contributions of one sub-interval. The squared entries are integrals of
/// squared violations, which add across intervals before the square root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalAssessment {
    pub t_start: f64,
    pub t_end: f64,
    pub running_cost: f64,
    pub state_violation_sq: Vec<f64>,
    pub input_violation_sq: Vec<f64>,
    pub residual_sq: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub cost: f64,
    pub inequality_violation: f64,
    pub dynamic_violation: f64,
    pub intervals: Vec<IntervalAssessment>,
}

/// Distance of `y` outside `[lower, upper]`.
pub fn violation(y: f64, lower: f64, upper: f64) -> f64 {
    if y < lower {
        lower - y
    } else if y > upper {
        y - upper
    } else {
        0.0
    }
}

fn has_bound(lo: f64, hi: f64) -> bool {
    is_finite_bound(lo) || is_finite_bound(hi)
}

pub fn assess(traj: &Trajectory, dop: &DopDefinition, tol: AssessTolerances) -> Result<AssessmentReport, AssessmentError> {
    if traj.n_x() != dop.n_x || traj.n_u() != dop.n_u {
        return Err(AssessmentError::Dimension { traj: traj.n_x(), traj_u: traj.n_u(), n_x: dop.n_x, n_u: dop.n_u });
    }
    let mut intervals = Vec::with_capacity(traj.intervals());
    for i in 0..traj.intervals() {
        let (t_start, t_end) = traj.interval(i);
        let nudge = ENDPOINT_NUDGE * (t_end - t_start);
        let (a, b) = (t_start + nudge, t_end - nudge);
        let integrate = |f: &dyn Fn(f64) -> f64| {
            integrate_adaptive(f, a, b, tol.rel, tol.abs)
                .map(|r| r.value)
                .map_err(|source| AssessmentError::Quadrature { interval: i, source })
        };
        let running_cost = integrate(&|t| dop.running_cost_at(&traj.state_on(i, t), &traj.input_on(i, t), t))?;
        let mut state_violation_sq = vec![0.0; dop.n_x];
        for k in 0..dop.n_x {
            let (lo, hi) = (dop.x_lower[k], dop.x_upper[k]);
            if has_bound(lo, hi) {
                state_violation_sq[k] = integrate(&|t| violation(traj.state_on(i, t)[k], lo, hi).powi(2))?;
            }
        }
        let mut input_violation_sq = vec![0.0; dop.n_u];
        for k in 0..dop.n_u {
            let (lo, hi) = (dop.u_lower[k], dop.u_upper[k]);
            if has_bound(lo, hi) {
                input_violation_sq[k] = integrate(&|t| violation(traj.input_on(i, t)[k], lo, hi).powi(2))?;
            }
        }
        let residual = |t: f64| dop.dynamics_at(&traj.state_rate_on(i, t), &traj.state_on(i, t), &traj.input_on(i, t), t);
        let residual_sq =
            (0..dop.n_r).map(|k| integrate(&|t| residual(t)[k].powi(2))).collect::<Result<Vec<_>, _>>()?;
        intervals.push(IntervalAssessment { t_start, t_end, running_cost, state_violation_sq, input_violation_sq, residual_sq });
    }

    let (t0, tf) = (traj.breakpoints()[0], traj.breakpoints()[traj.intervals()]);
    let boundary = dop.boundary_cost_at(&traj.state_on(0, t0), &traj.state_on(traj.intervals() - 1, tf));
    let cost = boundary + intervals.iter().map(|r| r.running_cost).sum::<f64>();
    let norm = |sel: &dyn Fn(&IntervalAssessment) -> f64| intervals.iter().map(sel).sum::<f64>().max(0.0).sqrt();
    let inequality_violation = (0..dop.n_u).map(|k| norm(&|r| r.input_violation_sq[k])).sum::<f64>()
        + (0..dop.n_x).map(|k| norm(&|r| r.state_violation_sq[k])).sum::<f64>();
    let dynamic_violation = (0..dop.n_r).map(|k| norm(&|r| r.residual_sq[k])).sum::<f64>() / dop.n_x as f64;
    Ok(AssessmentReport { cost, inequality_violation, dynamic_violation, intervals })
}
