//! Dense strictly convex quadratic programming.
//!
//! Solves
//!
//! ```text
//!     minimize     1/2 p' H p + g' p
//!     subject to   a_i' p  = b_i   (equalities)
//!                  a_i' p >= b_i   (inequalities)
//! ```
//!
//! with the dual active-set method of Goldfarb and Idnani. `H` must be
//! positive definite. The method starts from the unconstrained minimizer and
//! adds violated constraints one at a time, so no feasible starting point is
//! needed and infeasibility is detected when a violated constraint cannot be
//! reached by any primal or dual step.
//!
//! The factorization `J = L^-T Q` and the upper-triangular `R` are updated
//! with Givens rotations on every add/drop.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// A constraint that is linearly dependent on the active set and violated by
/// at most this multiple of the usual tolerance is taken as satisfied.
const DEPENDENT_SLACK: f64 = 1e4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("constraints are infeasible (constraint {0} cannot be satisfied)")]
    Infeasible(usize),
    #[error("active-set iteration limit {0} reached")]
    IterationLimit(usize),
}

/// Constraint normal. Bounds on a single variable are common enough in the
/// transcribed problems to warrant a sparse form.
#[derive(Clone, Debug)]
pub enum Normal {
    Dense(Vec<f64>),
    Unit { index: usize, sign: f64 },
}

impl Normal {
    fn dot(&self, x: &DVector<f64>) -> f64 {
        match self {
            Normal::Dense(a) => a.iter().zip(x.iter()).map(|(a, x)| a * x).sum(),
            Normal::Unit { index, sign } => sign * x[*index],
        }
    }

    fn norm_inf(&self) -> f64 {
        match self {
            Normal::Dense(a) => a.iter().fold(0.0, |m, v| m.max(v.abs())),
            Normal::Unit { sign, .. } => sign.abs(),
        }
    }

    /// `J' a`, written into `out`.
    fn project(&self, j: &DMatrix<f64>, out: &mut DVector<f64>) {
        match self {
            Normal::Dense(a) => {
                let av = DVector::from_column_slice(a);
                j.tr_mul_to(&av, out);
            }
            Normal::Unit { index, sign } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = sign * j[(*index, k)];
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub normal: Normal,
    pub rhs: f64,
    pub equality: bool,
}

impl Constraint {
    pub fn dense_eq(row: Vec<f64>, rhs: f64) -> Self {
        Self { normal: Normal::Dense(row), rhs, equality: true }
    }

    pub fn dense_ge(row: Vec<f64>, rhs: f64) -> Self {
        Self { normal: Normal::Dense(row), rhs, equality: false }
    }

    /// `sign * p[index] >= rhs`
    pub fn unit_ge(index: usize, sign: f64, rhs: f64) -> Self {
        Self { normal: Normal::Unit { index, sign }, rhs, equality: false }
    }

    pub fn unit_eq(index: usize, rhs: f64) -> Self {
        Self { normal: Normal::Unit { index, sign: 1.0 }, rhs, equality: true }
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticProgram {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per constraint; zero when inactive. Satisfies
    /// `H x + g = sum_i multipliers[i] * a_i`, with non-negative entries for
    /// inequalities.
    pub multipliers: Vec<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
}

impl QuadraticProgram {
    pub fn new(hessian: DMatrix<f64>, gradient: DVector<f64>) -> Self {
        Self { hessian, gradient, constraints: Vec::new() }
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn dimension(&self) -> usize {
        self.gradient.len()
    }

    pub fn solve(&self) -> Result<QpSolution, QpError> {
        Solver::new(self)?.run()
    }
}

struct Solver<'a> {
    qp: &'a QuadraticProgram,
    n: usize,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: usize,
    x: DVector<f64>,
    active: Vec<usize>,
    /// Multipliers of `active`, in the flipped orientation for equalities.
    u: Vec<f64>,
    /// Sign applied to each constraint's normal (equalities may be flipped).
    orient: Vec<f64>,
    /// Equalities already satisfied and linearly dependent on the active set.
    skipped: Vec<bool>,
    d: DVector<f64>,
}

impl<'a> Solver<'a> {
    fn new(qp: &'a QuadraticProgram) -> Result<Self, QpError> {
        let n = qp.dimension();
        let chol = qp.hessian.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
        // J = L^-T
        let l = chol.l();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(QpError::NotPositiveDefinite)?;
        let j = linv.transpose();
        // x = -G^-1 g = -J J' g
        let jt_g = j.tr_mul(&qp.gradient);
        let x = -(&j * jt_g);
        let m = qp.constraints.len();
        Ok(Self {
            qp,
            n,
            j,
            r: DMatrix::zeros(n, n),
            q: 0,
            x,
            active: Vec::new(),
            u: Vec::new(),
            orient: vec![1.0; m],
            skipped: vec![false; m],
            d: DVector::zeros(n),
        })
    }

    fn slack(&self, i: usize) -> f64 {
        let c = &self.qp.constraints[i];
        self.orient[i] * (c.normal.dot(&self.x) - c.rhs)
    }

    fn violation_tol(&self, i: usize) -> f64 {
        let c = &self.qp.constraints[i];
        let xmax = self.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1e-12 * (1.0 + c.rhs.abs() + c.normal.norm_inf() * xmax)
    }

    fn pick(&self) -> Option<usize> {
        let m = self.qp.constraints.len();
        let is_active = {
            let mut v = vec![false; m];
            for &a in &self.active {
                v[a] = true;
            }
            v
        };
        // all equalities go in first
        for i in 0..m {
            if self.qp.constraints[i].equality && !is_active[i] && !self.skipped[i] {
                return Some(i);
            }
        }
        let mut best = None;
        let mut worst = 0.0;
        for i in 0..m {
            if is_active[i] || self.skipped[i] || self.qp.constraints[i].equality {
                continue;
            }
            let s = self.slack(i);
            if s < -self.violation_tol(i) {
                let scaled = s / self.qp.constraints[i].normal.norm_inf().max(1e-300);
                if scaled < worst {
                    worst = scaled;
                    best = Some(i);
                }
            }
        }
        best
    }

    fn run(mut self) -> Result<QpSolution, QpError> {
        let m = self.qp.constraints.len();
        let limit = 10 * (m + self.n) + 100;
        let mut iterations = 0;
        while let Some(p) = self.pick() {
            if self.qp.constraints[p].equality && self.slack(p) > 0.0 {
                self.orient[p] = -1.0;
            }
            let mut u_new = self.u.clone();
            u_new.push(0.0);
            loop {
                iterations += 1;
                if iterations > limit {
                    return Err(QpError::IterationLimit(limit));
                }
                let normal = &self.qp.constraints[p].normal;
                normal.project(&self.j, &mut self.d);
                let sgn = self.orient[p];
                self.d *= sgn;

                // primal direction z = J2 d2, dual direction r = R^-1 d1
                let mut z = DVector::zeros(self.n);
                for k in self.q..self.n {
                    z.axpy(self.d[k], &self.j.column(k), 1.0);
                }
                let r = self.back_substitute();

                let d_norm2: f64 = self.d.iter().map(|v| v * v).sum();
                let d2_norm2: f64 = self.d.rows(self.q, self.n - self.q).iter().map(|v| v * v).sum();
                let primal_step_exists = d2_norm2 > 1e-20 * d_norm2.max(1e-300);

                let mut t1 = f64::INFINITY;
                let mut drop_at = None;
                for (k, &rk) in r.iter().enumerate() {
                    let ak = self.active[k];
                    if !self.qp.constraints[ak].equality && rk > 0.0 {
                        let ratio = u_new[k] / rk;
                        if ratio < t1 {
                            t1 = ratio;
                            drop_at = Some(k);
                        }
                    }
                }
                let s = self.slack(p);
                let t2 = if primal_step_exists { -s / d2_norm2 } else { f64::INFINITY };

                if !primal_step_exists && self.qp.constraints[p].equality && s.abs() <= self.violation_tol(p) {
                    // already satisfied and dependent on the active set
                    self.skipped[p] = true;
                    u_new.pop();
                    self.u = u_new;
                    break;
                }

                let t = t1.min(t2);
                if !t.is_finite() && s.abs() <= DEPENDENT_SLACK * self.violation_tol(p) {
                    // determined by the active set up to round-off
                    self.skipped[p] = true;
                    u_new.pop();
                    self.u = u_new;
                    break;
                }
                if !t.is_finite() {
                    return Err(QpError::Infeasible(p));
                }
                for (k, rk) in r.iter().enumerate() {
                    u_new[k] -= t * rk;
                }
                *u_new.last_mut().unwrap() += t;

                if t2.is_finite() {
                    self.x.axpy(t, &z, 1.0);
                }
                if t2 <= t1 {
                    self.add_constraint(p);
                    self.u = u_new;
                    break;
                }
                let k = drop_at.expect("finite partial step has a blocking constraint");
                self.drop_constraint(k);
                u_new.remove(k);
            }
        }

        let mut multipliers = vec![0.0; m];
        for (k, &a) in self.active.iter().enumerate() {
            multipliers[a] = self.orient[a] * self.u[k];
        }
        Ok(QpSolution { x: self.x, multipliers, active: self.active, iterations })
    }

    fn back_substitute(&self) -> DVector<f64> {
        let q = self.q;
        let mut r = DVector::zeros(q);
        for i in (0..q).rev() {
            let mut s = self.d[i];
            for k in i + 1..q {
                s -= self.r[(i, k)] * r[k];
            }
            r[i] = s / self.r[(i, i)];
        }
        r
    }

    fn add_constraint(&mut self, p: usize) {
        // self.d holds J' n+ for the current J
        for k in (self.q + 1..self.n).rev() {
            let (a, b) = (self.d[k - 1], self.d[k]);
            if b == 0.0 {
                continue;
            }
            let (c, s, h) = givens(a, b);
            self.d[k - 1] = h;
            self.d[k] = 0.0;
            rotate_columns(&mut self.j, k - 1, k, c, s);
        }
        for i in 0..=self.q {
            self.r[(i, self.q)] = self.d[i];
        }
        self.active.push(p);
        self.q += 1;
    }

    fn drop_constraint(&mut self, k: usize) {
        let q = self.q;
        for col in k..q - 1 {
            for i in 0..q {
                self.r[(i, col)] = self.r[(i, col + 1)];
            }
        }
        for i in 0..q {
            self.r[(i, q - 1)] = 0.0;
        }
        for col in k..q - 1 {
            let (a, b) = (self.r[(col, col)], self.r[(col + 1, col)]);
            if b == 0.0 {
                continue;
            }
            let (c, s, h) = givens(a, b);
            self.r[(col, col)] = h;
            self.r[(col + 1, col)] = 0.0;
            for jcol in col + 1..q - 1 {
                let (x, y) = (self.r[(col, jcol)], self.r[(col + 1, jcol)]);
                self.r[(col, jcol)] = c * x + s * y;
                self.r[(col + 1, jcol)] = -s * x + c * y;
            }
            rotate_columns(&mut self.j, col, col + 1, c, s);
        }
        self.active.remove(k);
        self.q -= 1;
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    (a / h, b / h, h)
}

fn rotate_columns(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    let rows = m.nrows();
    for r in 0..rows {
        let (x, y) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * x + s * y;
        m[(r, j)] = -s * x + c * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_qp(n: usize, g: &[f64]) -> QuadraticProgram {
        QuadraticProgram::new(DMatrix::identity(n, n), DVector::from_column_slice(g))
    }

    #[test]
    fn unconstrained_minimizer() {
        let qp = identity_qp(2, &[1.0, -2.0]);
        let s = qp.solve().unwrap();
        assert_abs_diff_eq!(s.x[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn quadprog_reference_example() {
        // min 1/2 x^2 + 1/2 y^2 + x  s.t. x + 2y >= 1  ->  (-0.6, 0.8)
        let mut qp = identity_qp(2, &[1.0, 0.0]);
        qp.push(Constraint::dense_ge(vec![1.0, 2.0], 1.0));
        let s = qp.solve().unwrap();
        assert_abs_diff_eq!(s.x[0], -0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x[1], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(s.multipliers[0], 0.4, epsilon = 1e-14);
    }

    #[test]
    fn equality_with_negative_multiplier() {
        // min 1/2 |x|^2 s.t. x0 + x1 = -2  -> x = (-1,-1), lambda = -1
        let mut qp = identity_qp(2, &[0.0, 0.0]);
        qp.push(Constraint::dense_eq(vec![1.0, 1.0], -2.0));
        let s = qp.solve().unwrap();
        assert_abs_diff_eq!(s.x[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.multipliers[0], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn drops_constraint_that_becomes_inactive() {
        // min 1/2|x - (2, 2)|^2 with x0 <= 1 and x0 + x1 <= 1.5:
        // solution (0.75, 0.75), only the second active.
        let mut qp = identity_qp(2, &[-2.0, -2.0]);
        qp.push(Constraint::unit_ge(0, -1.0, -1.0));
        qp.push(Constraint::dense_ge(vec![-1.0, -1.0], -1.5));
        let s = qp.solve().unwrap();
        assert_abs_diff_eq!(s.x[0], 0.75, epsilon = 1e-13);
        assert_abs_diff_eq!(s.x[1], 0.75, epsilon = 1e-13);
        assert_abs_diff_eq!(s.multipliers[0], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(s.multipliers[1], 1.25, epsilon = 1e-13);
    }

    #[test]
    fn detects_infeasibility() {
        let mut qp = identity_qp(1, &[0.0]);
        qp.push(Constraint::unit_ge(0, 1.0, 1.0));
        qp.push(Constraint::unit_ge(0, -1.0, 0.0));
        assert!(matches!(qp.solve(), Err(QpError::Infeasible(_))));
    }

    #[test]
    fn dependent_consistent_equalities_are_skipped() {
        let mut qp = identity_qp(2, &[0.0, 0.0]);
        qp.push(Constraint::dense_eq(vec![1.0, 1.0], 1.0));
        qp.push(Constraint::dense_eq(vec![2.0, 2.0], 2.0));
        let s = qp.solve().unwrap();
        assert_abs_diff_eq!(s.x[0], 0.5, epsilon = 1e-13);
    }

    #[test]
    fn kkt_conditions_hold_on_random_programs() {
        use proptest::prelude::*;
        use proptest::test_runner::{Config, TestRunner};
        let mut runner = TestRunner::new(Config::with_cases(64));
        let strat = (2usize..8, proptest::collection::vec(-1.0f64..1.0, 200));
        runner
            .run(&strat, |(n, pool)| {
                let mut it = pool.iter().cycle().copied();
                let mut m = DMatrix::from_fn(n, n, |_, _| it.next().unwrap());
                m = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
                let g = DVector::from_fn(n, |_, _| it.next().unwrap());
                let mut qp = QuadraticProgram::new(m.clone(), g.clone());
                qp.push(Constraint::dense_eq((0..n).map(|_| it.next().unwrap()).collect(), 0.3));
                for _ in 0..n {
                    let row: Vec<f64> = (0..n).map(|_| it.next().unwrap()).collect();
                    qp.push(Constraint::dense_ge(row, it.next().unwrap()));
                }
                for i in 0..n {
                    qp.push(Constraint::unit_ge(i, -1.0, -3.0));
                }
                let s = match qp.solve() {
                    Ok(s) => s,
                    Err(QpError::Infeasible(_)) => return Ok(()),
                    Err(e) => panic!("{e}"),
                };
                // stationarity
                let mut resid = &m * &s.x + &g;
                for (c, lam) in qp.constraints.iter().zip(&s.multipliers) {
                    match &c.normal {
                        Normal::Dense(a) => {
                            for (r, ai) in resid.iter_mut().zip(a) {
                                *r -= lam * ai;
                            }
                        }
                        Normal::Unit { index, sign } => resid[*index] -= lam * sign,
                    }
                }
                prop_assert!(resid.amax() < 1e-9, "stationarity {}", resid.amax());
                for (c, lam) in qp.constraints.iter().zip(&s.multipliers) {
                    let slack = c.normal.dot(&s.x) - c.rhs;
                    if c.equality {
                        prop_assert!(slack.abs() < 1e-9);
                    } else {
                        prop_assert!(slack > -1e-9);
                        prop_assert!(*lam >= -1e-12);
                        prop_assert!((lam * slack).abs() < 1e-9);
                    }
                }
                Ok(())
            })
            .unwrap();
    }
}
