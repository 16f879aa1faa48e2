use std::f64::consts::PI;
use std::sync::Arc;

use flexcolloc_nlp::Dual;

use crate::transcription::{DopDefinition, UNBOUNDED};

/// Physical constants and boundary data of the swing-up, as tabulated in
/// Kelly, "An Introduction to Trajectory Optimization" (2017), App. E.1.
pub mod constants {
    /// Cart mass (kg).
    pub const CART_MASS: f64 = 1.0;
    /// Pole point mass (kg).
    pub const POLE_MASS: f64 = 0.3;
    /// Pole length (m).
    pub const POLE_LENGTH: f64 = 0.5;
    /// Gravitational acceleration (m/s^2).
    pub const GRAVITY: f64 = 9.81;
    /// Horizon (s).
    pub const DURATION: f64 = 2.0;
    /// Final cart position (m).
    pub const DISTANCE: f64 = 1.0;
    /// Cart position box (m).
    pub const POSITION_MIN: f64 = 0.0;
    pub const POSITION_MAX: f64 = 1.0;
}

use constants::*;

/// Accelerations `(q1'', q2'')` for state `(q1, q2, q1', q2')` and force `u`.
pub fn cart_pole_acceleration(q2: Dual, dq2: Dual, u: Dual) -> (Dual, Dual) {
    let (s, c) = (q2.sin(), q2.cos());
    let (m1, m2, l, g) = (CART_MASS, POLE_MASS, POLE_LENGTH, GRAVITY);
    let denom = m1 + m2 * (1.0 - c * c);
    let ddq1 = (l * m2 * s * dq2 * dq2 + u + m2 * g * c * s) / denom;
    let ddq2 = -(l * m2 * c * s * dq2 * dq2 + u * c + (m1 + m2) * g * s) / (l * denom);
    (ddq1, ddq2)
}

/// Total mechanical energy, zero potential at the pivot height.
pub fn cart_pole_energy(x: &[f64]) -> f64 {
    let (q2, dq1, dq2) = (x[1], x[2], x[3]);
    let (m1, m2, l, g) = (CART_MASS, POLE_MASS, POLE_LENGTH, GRAVITY);
    0.5 * (m1 + m2) * dq1 * dq1 + m2 * l * dq1 * dq2 * q2.cos() + 0.5 * m2 * l * l * dq2 * dq2
        - m2 * g * l * q2.cos()
}

/// Swing the pole from hanging at rest to inverted at rest while moving the
/// cart by `DISTANCE`, minimizing `int u^2`, with `0 <= q1 <= 1`.
pub fn cart_pole() -> DopDefinition {
    DopDefinition {
        name: "cart-pole".into(),
        n_x: 4,
        n_u: 1,
        n_b: 8,
        n_r: 4,
        t0: 0.0,
        tf: DURATION,
        boundary_cost: None,
        running_cost: Arc::new(|_x, u, _t| u[0].square()),
        boundary_conditions: Arc::new(|x0, xf| {
            vec![x0[0], x0[1], x0[2], x0[3], xf[0] - DISTANCE, xf[1] - PI, xf[2], xf[3]]
        }),
        dynamics: Arc::new(|xd, x, u, _t| {
            let (ddq1, ddq2) = cart_pole_acceleration(x[1], x[3], u[0]);
            vec![xd[0] - x[2], xd[1] - x[3], xd[2] - ddq1, xd[3] - ddq2]
        }),
        x_lower: vec![POSITION_MIN, -UNBOUNDED, -UNBOUNDED, -UNBOUNDED],
        x_upper: vec![POSITION_MAX, UNBOUNDED, UNBOUNDED, UNBOUNDED],
        u_lower: vec![-UNBOUNDED],
        u_upper: vec![UNBOUNDED],
        x0_hint: vec![Some(0.0), Some(0.0), Some(0.0), Some(0.0)],
        xf_hint: vec![Some(DISTANCE), Some(PI), Some(0.0), Some(0.0)],
    }
}
