//! Gradients and Jacobians of problem callbacks.
//!
//! Forward mode seeds one coordinate direction per pass. Central differences
//! are kept for callbacks that cannot be differentiated through (for example
//! ones that branch on or round their inputs).

use nalgebra::DMatrix;

use crate::dual::Dual;
use crate::problem::NlpProblem;
use crate::NlpError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Differentiation {
    #[default]
    Forward,
    CentralDifference,
}

fn fd_step(z: f64) -> f64 {
    1e-6 * z.abs().max(1.0)
}

pub fn gradient(
    f: &dyn Fn(&[Dual]) -> Dual,
    z: &[f64],
    mode: Differentiation,
) -> Result<Vec<f64>, NlpError> {
    let mut point: Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
    let mut g = vec![0.0; z.len()];
    for i in 0..z.len() {
        g[i] = match mode {
            Differentiation::Forward => {
                point[i].eps = 1.0;
                let d = f(&point).eps;
                point[i].eps = 0.0;
                d
            }
            Differentiation::CentralDifference => {
                let h = fd_step(z[i]);
                point[i].re = z[i] + h;
                let fp = f(&point).re;
                point[i].re = z[i] - h;
                let fm = f(&point).re;
                point[i].re = z[i];
                (fp - fm) / (2.0 * h)
            }
        };
        if !g[i].is_finite() {
            return Err(NlpError::NonFinite(format!("gradient component {i}")));
        }
    }
    Ok(g)
}

/// Dense Jacobian, `len x z.len()`, of a vector callback.
pub fn jacobian(
    c: &dyn Fn(&[Dual]) -> Vec<Dual>,
    len: usize,
    z: &[f64],
    mode: Differentiation,
) -> Result<DMatrix<f64>, NlpError> {
    let n = z.len();
    let mut jac = DMatrix::zeros(len, n);
    if len == 0 {
        return Ok(jac);
    }
    let mut point: Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
    for i in 0..n {
        match mode {
            Differentiation::Forward => {
                point[i].eps = 1.0;
                let out = c(&point);
                point[i].eps = 0.0;
                check_len(&out, len)?;
                for (r, d) in out.iter().enumerate() {
                    jac[(r, i)] = d.eps;
                }
            }
            Differentiation::CentralDifference => {
                let h = fd_step(z[i]);
                point[i].re = z[i] + h;
                let plus = c(&point);
                point[i].re = z[i] - h;
                let minus = c(&point);
                point[i].re = z[i];
                check_len(&plus, len)?;
                for r in 0..len {
                    jac[(r, i)] = (plus[r].re - minus[r].re) / (2.0 * h);
                }
            }
        }
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(NlpError::NonFinite("jacobian".into()));
    }
    Ok(jac)
}

/// Largest entrywise disagreement between forward-mode and central-difference
/// derivatives of the objective and every nonlinear constraint at `z`,
/// measured relative to `max(1, |fd|)`.
pub fn derivative_mismatch(problem: &NlpProblem, z: &[f64]) -> Result<f64, NlpError> {
    let rel = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max);
    let g_ad = gradient(&*problem.objective, z, Differentiation::Forward)?;
    let g_fd = gradient(&*problem.objective, z, Differentiation::CentralDifference)?;
    let mut worst = rel(&g_ad, &g_fd);
    for c in [&problem.equalities, &problem.inequalities] {
        let ad = jacobian(&*c.eval, c.len, z, Differentiation::Forward)?;
        let fd = jacobian(&*c.eval, c.len, z, Differentiation::CentralDifference)?;
        worst = worst.max(rel(ad.as_slice(), fd.as_slice()));
    }
    Ok(worst)
}

fn check_len(out: &[Dual], len: usize) -> Result<(), NlpError> {
    if out.len() != len {
        return Err(NlpError::Dimension(format!("constraint callback returned {} values, expected {len}", out.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradient_of_product() {
        let f = |z: &[Dual]| z[0] * z[1];
        let g = gradient(&f, &[2.0, 3.0], Differentiation::Forward).unwrap();
        assert_eq!(g, vec![3.0, 2.0]);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = |_: &[Dual]| Dual::constant(4.2);
        let g = gradient(&f, &[1.0, -1.0, 0.5], Differentiation::Forward).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn sine_gradient_matches_finite_differences() {
        let f = |z: &[Dual]| z[0].sin();
        let ad = gradient(&f, &[0.7], Differentiation::Forward).unwrap();
        let fd = gradient(&f, &[0.7], Differentiation::CentralDifference).unwrap();
        assert_relative_eq!(ad[0], 0.7f64.cos(), epsilon = 1e-15);
        assert!((ad[0] - fd[0]).abs() < 1e-6);
    }

    #[test]
    fn jacobian_both_modes_agree() {
        let c = |z: &[Dual]| vec![z[0] * z[1].exp(), z[0].powi(3) - z[1], (z[0] / z[1]).sin()];
        let z = [0.4, 1.3];
        let ad = jacobian(&c, 3, &z, Differentiation::Forward).unwrap();
        let fd = jacobian(&c, 3, &z, Differentiation::CentralDifference).unwrap();
        for (a, b) in ad.iter().zip(fd.iter()) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn mismatch_flags_a_wrong_derivative() {
        let honest = NlpProblem::new(2, |z: &[Dual]| z[0] * z[1].sin()).with_equalities(1, |z: &[Dual]| vec![z[0].exp() - z[1]]);
        assert!(derivative_mismatch(&honest, &[0.3, -1.2]).unwrap() < 1e-8);
        // value of z^2 with the derivative of z^3
        let lying = NlpProblem::new(1, |z: &[Dual]| Dual { re: z[0].re * z[0].re, eps: 3.0 * z[0].re * z[0].re * z[0].eps });
        assert!(derivative_mismatch(&lying, &[2.0]).unwrap() > 1.0);
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let f = |z: &[Dual]| z[0].ln();
        assert!(gradient(&f, &[0.0], Differentiation::Forward).is_err());
    }
}
