use std::sync::Arc;

use flexcolloc_nlp::{solve, NlpSolution, SolverOptions};

use crate::transcription::{assemble, ConstraintMode, DopDefinition, FlexibleMesh, UNBOUNDED};

pub const BRYSON_DENHAM_BOUND: f64 = 0.2;

/// Double integrator `r'' = u` on `[0, 1]` bouncing from `(r, v) = (0, 1)`
/// to `(0, -1)` with `r <= 0.2`, minimizing `int u^2 / 2`.
pub fn bryson_denham() -> DopDefinition {
    bryson_denham_with_bound(BRYSON_DENHAM_BOUND)
}

pub fn bryson_denham_with_bound(bound: f64) -> DopDefinition {
    DopDefinition {
        name: "bryson-denham".into(),
        n_x: 2,
        n_u: 1,
        n_b: 4,
        n_r: 2,
        t0: 0.0,
        tf: 1.0,
        boundary_cost: None,
        running_cost: Arc::new(|_x, u, _t| 0.5 * u[0].square()),
        boundary_conditions: Arc::new(|x0, xf| vec![x0[0], x0[1] - 1.0, xf[0], xf[1] + 1.0]),
        dynamics: Arc::new(|xd, x, u, _t| vec![xd[0] - x[1], xd[1] - u[0]]),
        x_lower: vec![-UNBOUNDED, -UNBOUNDED],
        x_upper: vec![bound, UNBOUNDED],
        u_lower: vec![-UNBOUNDED],
        u_upper: vec![UNBOUNDED],
        x0_hint: vec![Some(0.0), Some(1.0)],
        xf_hint: vec![Some(0.0), Some(-1.0)],
    }
}

/// Closed-form optimal cost for the bound `l`.
///
/// For `l >= 1/4` the constraint is inactive and `u = -2`. For
/// `1/6 <= l <= 1/4` the optimal `r` is a pair of cubics touching `l` at `t = 1/2`.
/// Below `1/6` a boundary arc `r = l` appears and the cost is `4 / (9 l)`.
pub fn bryson_denham_analytic_cost(l: f64) -> f64 {
    if l >= 0.25 {
        2.0
    } else if l >= 1.0 / 6.0 {
        // on [0, 1/2]: r = t + a t^2 + b t^3, u = 2a + 6bt
        let a = -4.0 + 12.0 * l;
        let b = 4.0 - 16.0 * l;
        if b.abs() < 1e-12 {
            return 4.0 * a * a * 0.5;
        }
        ((2.0 * a + 3.0 * b).powi(3) - (2.0 * a).powi(3)) / (18.0 * b)
    } else {
        4.0 / (9.0 * l)
    }
}

/// High-resolution mode-(c) solve used as a convergence target.
pub fn bryson_denham_fine_reference(
    n: usize,
    n_h: usize,
    options: &SolverOptions,
) -> Result<NlpSolution, Box<dyn std::error::Error + Send + Sync>> {
    let dop = bryson_denham();
    let mesh = FlexibleMesh::equispaced(dop.t0, dop.tf, n_h, 0.5)?;
    let assembled = assemble(&dop, n, &mesh, ConstraintMode::BernsteinFlexible)?;
    Ok(solve(&assembled.nlp, options)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use flexcolloc_nlp::dual::constants;
    use flexcolloc_nlp::Dual;

    #[test]
    fn residual_and_cost_examples() {
        let dop = bryson_denham();
        assert_eq!(dop.dynamics_at(&[1.0, 0.0], &[0.0, 1.0], &[0.0], 0.0), vec![0.0, 0.0]);
        assert_eq!(dop.running_cost_at(&[0.0, 0.0], &[2.0], 0.3), 2.0);
        assert_eq!(dop.boundary_conditions_at(&[0.0, 1.0], &[0.0, -1.0]), vec![0.0; 4]);
        let r = (dop.dynamics)(&constants(&[0.0, 0.0]), &constants(&[0.0, 0.0]), &[Dual::variable(3.0)], Dual::constant(0.0));
        assert_eq!(r[1].eps, -1.0);
    }

    #[test]
    fn analytic_cost_is_continuous_across_regimes() {
        assert_abs_diff_eq!(bryson_denham_analytic_cost(0.25), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bryson_denham_analytic_cost(0.25 - 1e-9), 2.0, epsilon = 1e-6);
        let sixth = 1.0 / 6.0;
        assert_abs_diff_eq!(bryson_denham_analytic_cost(sixth), 4.0 / (9.0 * sixth), epsilon = 1e-9);
        assert_abs_diff_eq!(bryson_denham_analytic_cost(0.2), 2.24, epsilon = 1e-12);
    }

    #[test]
    fn analytic_cost_matches_quadrature_of_the_cubic_arc() {
        // independent oracle: integrate u^2/2 of the symmetric cubic arc by Simpson
        let l: f64 = 0.2;
        let (a, b) = (-4.0 + 12.0 * l, 4.0 - 16.0 * l);
        let m = 2000;
        let h = 0.5 / m as f64;
        let f = |t: f64| 0.5 * (2.0 * a + 6.0 * b * t).powi(2);
        let mut s = f(0.0) + f(0.5);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        let half = s * h / 3.0;
        assert_abs_diff_eq!(2.0 * half, bryson_denham_analytic_cost(l), epsilon = 1e-10);
        // boundary data of the arc
        let r = |t: f64| t + a * t * t + b * t * t * t;
        assert_abs_diff_eq!(r(0.5), l, epsilon = 1e-14);
        assert_abs_diff_eq!(1.0 + 2.0 * a * 0.5 + 3.0 * b * 0.25, 0.0, epsilon = 1e-14);
    }
}
