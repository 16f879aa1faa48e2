//! Sequential quadratic programming with a damped BFGS Hessian and an l1
//! merit line search.
//!
//! Every iteration solves a dense convex QP built from the linearized
//! constraints. When the linearization is inconsistent the QP is re-solved in
//! elastic mode, with penalized slacks on the nonlinear rows. A single
//! second-order correction is attempted before backtracking.

use log::{debug, trace};
use nalgebra::{DMatrix, DVector};

use crate::derivatives::{gradient, jacobian};
use crate::dual::constants;
use crate::problem::{is_finite_bound, NlpProblem};
use crate::qp::{Constraint, QpError, QuadraticProgram};
use crate::NlpError;

/// Relative rounding error assumed for one constraint row.
const ROW_ROUNDING: f64 = 64.0 * f64::EPSILON;

/// Relative rounding error assumed for merit function values.
const MERIT_ROUNDING: f64 = 32.0 * f64::EPSILON;

/// Step damping is a relative increase of the Hessian diagonal.
const MIN_DAMPING: f64 = 1e-2;
const MAX_DAMPING: f64 = 1e8;
const DAMPING_FACTOR: f64 = 10.0;

const MAX_HESSIAN_CONDITION: f64 = 1e10;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 3000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Infeasible,
    /// The line search could not make progress even after a Hessian reset.
    Stalled,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Stalled => "stalled",
        }
    }
}

/// Merit values around one accepted step, evaluated with the same penalty.
#[derive(Clone, Copy, Debug)]
pub struct MeritStep {
    pub penalty: f64,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug)]
pub struct NlpSolution {
    pub z: Vec<f64>,
    pub objective: f64,
    /// Multipliers satisfy `grad f = J_E' eq + J_I' ineq + A' linear + bounds`
    /// at a KKT point; inequality and bound multipliers are positive on an
    /// active lower side and negative on an active upper side.
    pub equality_multipliers: Vec<f64>,
    pub inequality_multipliers: Vec<f64>,
    pub linear_multipliers: Vec<f64>,
    pub bound_multipliers: Vec<f64>,
    pub status: SolveStatus,
    pub kkt_residual: f64,
    pub max_violation: f64,
    pub iterations: usize,
    pub merit_history: Vec<MeritStep>,
}

struct Scaling {
    objective: f64,
    equality: Vec<f64>,
    inequality: Vec<f64>,
}

struct Floors {
    eq: Vec<f64>,
    ineq: Vec<f64>,
    lin: Vec<f64>,
}

struct Point {
    z: Vec<f64>,
    f: f64,
    g: DVector<f64>,
    ce: DVector<f64>,
    je: DMatrix<f64>,
    ci: DVector<f64>,
    ji: DMatrix<f64>,
    cl: DVector<f64>,
}

#[derive(Clone, Copy, Debug)]
enum Origin {
    Eq(usize),
    IneqLower(usize),
    IneqUpper(usize),
    LinEq(usize),
    LinLower(usize),
    LinUpper(usize),
    Fixed(usize),
    BoundLower(usize),
    BoundUpper(usize),
    Slack,
}

#[derive(Default, Clone)]
struct Multipliers {
    eq: Vec<f64>,
    ineq: Vec<f64>,
    lin: Vec<f64>,
    bound: Vec<f64>,
}

impl Multipliers {
    fn zeros(p: &NlpProblem) -> Self {
        Self {
            eq: vec![0.0; p.equalities.len],
            ineq: vec![0.0; p.inequalities.len],
            lin: vec![0.0; p.linear.len()],
            bound: vec![0.0; p.dimension],
        }
    }

    fn norm_inf(&self) -> f64 {
        self.eq
            .iter()
            .chain(&self.ineq)
            .chain(&self.lin)
            .chain(&self.bound)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

struct QpStep {
    p: DVector<f64>,
    mult: Multipliers,
    elastic: bool,
}

pub fn solve(problem: &NlpProblem, options: &SolverOptions) -> Result<NlpSolution, NlpError> {
    problem.check_dimensions()?;
    if problem.initial_guess.iter().any(|v| !v.is_finite()) {
        return Err(NlpError::NonFinite("initial guess".into()));
    }
    Sqp::new(problem, options)?.run()
}

struct Sqp<'a> {
    problem: &'a NlpProblem,
    options: &'a SolverOptions,
    scaling: Scaling,
    n: usize,
}

impl<'a> Sqp<'a> {
    fn new(problem: &'a NlpProblem, options: &'a SolverOptions) -> Result<Self, NlpError> {
        let z0 = project(&problem.initial_guess, &problem.lower, &problem.upper);
        let f0 = problem.objective_value(&z0);
        if !f0.is_finite() {
            return Err(NlpError::NonFinite("objective at initial guess".into()));
        }
        let ce0 = problem.equality_values(&z0);
        let ci0 = problem.inequality_values(&z0);
        let scale = |v: f64| 1.0 / v.abs().max(1.0);
        let scaling = Scaling {
            objective: scale(f0),
            equality: ce0.iter().map(|&v| scale(v)).collect(),
            inequality: ci0.iter().map(|&v| scale(v)).collect(),
        };
        Ok(Self { problem, options, scaling, n: problem.dimension })
    }

    fn evaluate(&self, z: Vec<f64>) -> Result<Point, NlpError> {
        let p = self.problem;
        let mode = p.differentiation;
        let dz = constants(&z);
        let f = (p.objective)(&dz).re * self.scaling.objective;
        if !f.is_finite() {
            return Err(NlpError::NonFinite("objective".into()));
        }
        let mut g = DVector::from_vec(gradient(&*p.objective, &z, mode)?);
        g *= self.scaling.objective;
        let ce = self.scaled_values(&(p.equalities.eval)(&dz), &self.scaling.equality, "equality")?;
        let mut je = jacobian(&*p.equalities.eval, p.equalities.len, &z, mode)?;
        scale_rows(&mut je, &self.scaling.equality);
        let ci = self.scaled_values(&(p.inequalities.eval)(&dz), &self.scaling.inequality, "inequality")?;
        let mut ji = jacobian(&*p.inequalities.eval, p.inequalities.len, &z, mode)?;
        scale_rows(&mut ji, &self.scaling.inequality);
        let cl = DVector::from_vec(p.linear.eval(&z));
        Ok(Point { z, f, g, ce, je, ci, ji, cl })
    }

    fn scaled_values(&self, v: &[crate::Dual], scale: &[f64], what: &str) -> Result<DVector<f64>, NlpError> {
        if v.len() != scale.len() {
            return Err(NlpError::Dimension(format!("{what} callback returned {} values, expected {}", v.len(), scale.len())));
        }
        let out = DVector::from_iterator(v.len(), v.iter().zip(scale).map(|(d, s)| d.re * s));
        if out.iter().any(|x| !x.is_finite()) {
            return Err(NlpError::NonFinite(format!("{what} constraints")));
        }
        Ok(out)
    }

    fn ineq_bounds(&self, i: usize) -> (f64, f64) {
        let s = self.scaling.inequality[i];
        let l = self.problem.inequality_lower[i];
        let u = self.problem.inequality_upper[i];
        (
            if is_finite_bound(l) { l * s } else { f64::NEG_INFINITY },
            if is_finite_bound(u) { u * s } else { f64::INFINITY },
        )
    }

    /// Per-row rounding error of the constraint values at `pt`, estimated
    /// from the size of the terms that make up each linearization.
    fn noise_floors(&self, pt: &Point) -> Floors {
        let cap = 0.1 * self.options.tol;
        let z = DVector::from_column_slice(&pt.z);
        let rows = |m: &DMatrix<f64>, c: &DVector<f64>| -> Vec<f64> {
            (0..m.nrows())
                .map(|r| {
                    let terms: f64 = m.row(r).iter().zip(z.iter()).map(|(a, v)| (a * v).abs()).sum();
                    (ROW_ROUNDING * (1.0 + c[r].abs() + terms)).min(cap)
                })
                .collect()
        };
        Floors { eq: rows(&pt.je, &pt.ce), ineq: rows(&pt.ji, &pt.ci), lin: rows(&self.problem.linear.rows, &pt.cl) }
    }

    /// l1 constraint violation in scaled units, optionally of the
    /// linearization `c + J p`. Residuals within `floors` are round-off and
    /// not counted, otherwise their noise can outweigh the objective
    /// decrease close to a solution.
    fn violation(&self, pt: &Point, step: Option<&DVector<f64>>, floors: &Floors) -> f64 {
        let (ce, ci, cl) = match step {
            None => (pt.ce.clone(), pt.ci.clone(), pt.cl.clone()),
            Some(p) => (
                &pt.ce + &pt.je * p,
                &pt.ci + &pt.ji * p,
                &pt.cl + &self.problem.linear.rows * p,
            ),
        };
        let part = |r: f64, floor: f64| (r - floor).max(0.0);
        let mut v: f64 = ce.iter().zip(&floors.eq).map(|(c, f)| part(c.abs(), *f)).sum();
        for (i, c) in ci.iter().enumerate() {
            let (l, u) = self.ineq_bounds(i);
            v += part(l - c, floors.ineq[i]) + part(c - u, floors.ineq[i]);
        }
        let lin = &self.problem.linear;
        for (i, c) in cl.iter().enumerate() {
            v += part(lin.lower[i] - c, floors.lin[i]) + part(c - lin.upper[i], floors.lin[i]);
        }
        v
    }

    fn max_scaled_violation(&self, pt: &Point) -> f64 {
        let mut v: f64 = pt.ce.amax();
        for (i, c) in pt.ci.iter().enumerate() {
            let (l, u) = self.ineq_bounds(i);
            v = v.max(l - c).max(c - u);
        }
        let lin = &self.problem.linear;
        for (i, c) in pt.cl.iter().enumerate() {
            v = v.max(lin.lower[i] - c).max(c - lin.upper[i]);
        }
        v.max(0.0)
    }

    /// Build the QP subproblem. `ce`/`ci` are the constant terms of the
    /// linearized nonlinear rows (the constraint values, or their
    /// second-order-corrected variants).
    fn build_qp(
        &self,
        pt: &Point,
        h: &DMatrix<f64>,
        ce: &DVector<f64>,
        ci: &DVector<f64>,
        floors: &Floors,
        elastic_penalty: Option<f64>,
    ) -> (QuadraticProgram, Vec<Origin>) {
        // residuals at round-off level are not chased, the correction would
        // cost more objective than it is worth
        let eq_rhs = |r: f64, floor: f64| if r.abs() <= floor { 0.0 } else { r };
        let ge_rhs = |r: f64, floor: f64| if r > 0.0 && r <= floor { 0.0 } else { r };
        let n = self.n;
        let prob = self.problem;
        let n_slack = match elastic_penalty {
            None => 0,
            Some(_) => {
                2 * ce.len()
                    + (0..ci.len())
                        .map(|i| {
                            let (l, u) = self.ineq_bounds(i);
                            l.is_finite() as usize + u.is_finite() as usize
                        })
                        .sum::<usize>()
            }
        };
        let dim = n + n_slack;
        let mut hess = DMatrix::zeros(dim, dim);
        hess.view_mut((0, 0), (n, n)).copy_from(h);
        let mut grad = DVector::zeros(dim);
        grad.rows_mut(0, n).copy_from(&pt.g);
        if let Some(rho) = elastic_penalty {
            for k in n..dim {
                hess[(k, k)] = 1e-6 * rho.max(1.0);
                grad[k] = rho;
            }
        }
        let mut qp = QuadraticProgram::new(hess, grad);
        let mut origin = Vec::new();
        let mut next_slack = n;
        let row = |m: &DMatrix<f64>, i: usize, sign: f64| -> Vec<f64> {
            let mut r = vec![0.0; dim];
            for k in 0..n {
                r[k] = sign * m[(i, k)];
            }
            r
        };

        // equalities first
        for i in 0..ce.len() {
            let mut r = row(&pt.je, i, 1.0);
            if elastic_penalty.is_some() {
                r[next_slack] = -1.0;
                r[next_slack + 1] = 1.0;
                next_slack += 2;
            }
            qp.push(Constraint::dense_eq(r, eq_rhs(-ce[i], floors.eq[i])));
            origin.push(Origin::Eq(i));
        }
        let lin = &prob.linear;
        for i in 0..lin.len() {
            if lin.lower[i] == lin.upper[i] {
                qp.push(Constraint::dense_eq(row(&lin.rows, i, 1.0), eq_rhs(lin.lower[i] - pt.cl[i], floors.lin[i])));
                origin.push(Origin::LinEq(i));
            }
        }
        for i in 0..n {
            if prob.lower[i] == prob.upper[i] {
                qp.push(Constraint::unit_eq(i, prob.lower[i] - pt.z[i]));
                origin.push(Origin::Fixed(i));
            }
        }

        for i in 0..ci.len() {
            let (l, u) = self.ineq_bounds(i);
            if l.is_finite() {
                let mut r = row(&pt.ji, i, 1.0);
                if elastic_penalty.is_some() {
                    r[next_slack] = 1.0;
                    next_slack += 1;
                }
                qp.push(Constraint::dense_ge(r, ge_rhs(l - ci[i], floors.ineq[i])));
                origin.push(Origin::IneqLower(i));
            }
            if u.is_finite() {
                let mut r = row(&pt.ji, i, -1.0);
                if elastic_penalty.is_some() {
                    r[next_slack] = 1.0;
                    next_slack += 1;
                }
                qp.push(Constraint::dense_ge(r, ge_rhs(ci[i] - u, floors.ineq[i])));
                origin.push(Origin::IneqUpper(i));
            }
        }
        for i in 0..lin.len() {
            if lin.lower[i] == lin.upper[i] {
                continue;
            }
            if is_finite_bound(lin.lower[i]) {
                qp.push(Constraint::dense_ge(row(&lin.rows, i, 1.0), ge_rhs(lin.lower[i] - pt.cl[i], floors.lin[i])));
                origin.push(Origin::LinLower(i));
            }
            if is_finite_bound(lin.upper[i]) {
                qp.push(Constraint::dense_ge(row(&lin.rows, i, -1.0), ge_rhs(pt.cl[i] - lin.upper[i], floors.lin[i])));
                origin.push(Origin::LinUpper(i));
            }
        }
        for i in 0..n {
            let (l, u) = (prob.lower[i], prob.upper[i]);
            if l == u {
                continue;
            }
            if is_finite_bound(l) {
                qp.push(Constraint::unit_ge(i, 1.0, l - pt.z[i]));
                origin.push(Origin::BoundLower(i));
            }
            if is_finite_bound(u) {
                qp.push(Constraint::unit_ge(i, -1.0, pt.z[i] - u));
                origin.push(Origin::BoundUpper(i));
            }
        }
        for k in n..dim {
            qp.push(Constraint::unit_ge(k, 1.0, 0.0));
            origin.push(Origin::Slack);
        }
        (qp, origin)
    }

    fn solve_qp(
        &self,
        pt: &Point,
        h: &DMatrix<f64>,
        ce: &DVector<f64>,
        ci: &DVector<f64>,
        penalty: f64,
        floors: &Floors,
    ) -> Result<QpStep, NlpError> {
        let (qp, origin) = self.build_qp(pt, h, ce, ci, floors, None);
        match qp.solve() {
            Ok(sol) => Ok(QpStep { p: sol.x, mult: self.map_multipliers(&origin, &sol.multipliers), elastic: false }),
            Err(QpError::Infeasible(_)) | Err(QpError::IterationLimit(_)) => {
                let rho = (10.0 * penalty).max(100.0);
                debug!("QP subproblem inconsistent, switching to elastic mode (rho = {rho:.3e})");
                let (qp, origin) = self.build_qp(pt, h, ce, ci, floors, Some(rho));
                let sol = qp.solve().map_err(|e| NlpError::QpFailure(e.to_string()))?;
                Ok(QpStep {
                    p: sol.x.rows(0, self.n).into_owned(),
                    mult: self.map_multipliers(&origin, &sol.multipliers),
                    elastic: true,
                })
            }
            Err(e) => Err(NlpError::QpFailure(e.to_string())),
        }
    }

    fn map_multipliers(&self, origin: &[Origin], qp_mult: &[f64]) -> Multipliers {
        let mut m = Multipliers::zeros(self.problem);
        for (o, &lam) in origin.iter().zip(qp_mult) {
            match *o {
                Origin::Eq(i) => m.eq[i] = lam,
                Origin::IneqLower(i) => m.ineq[i] += lam,
                Origin::IneqUpper(i) => m.ineq[i] -= lam,
                Origin::LinEq(i) => m.lin[i] = lam,
                Origin::LinLower(i) => m.lin[i] += lam,
                Origin::LinUpper(i) => m.lin[i] -= lam,
                Origin::Fixed(i) => m.bound[i] = lam,
                Origin::BoundLower(i) => m.bound[i] += lam,
                Origin::BoundUpper(i) => m.bound[i] -= lam,
                Origin::Slack => {}
            }
        }
        m
    }

    /// Gradient of the Lagrangian restricted to the nonlinear terms (linear
    /// rows and bounds have constant gradients and cancel in BFGS
    /// differences).
    fn lagrangian_gradient(&self, pt: &Point, m: &Multipliers) -> DVector<f64> {
        let le = DVector::from_column_slice(&m.eq);
        let li = DVector::from_column_slice(&m.ineq);
        &pt.g - pt.je.tr_mul(&le) - pt.ji.tr_mul(&li)
    }

    fn kkt_residual(&self, pt: &Point, m: &Multipliers) -> f64 {
        let prob = self.problem;
        let ll = DVector::from_column_slice(&m.lin);
        let lb = DVector::from_column_slice(&m.bound);
        let stationarity = (self.lagrangian_gradient(pt, m) - prob.linear.rows.tr_mul(&ll) - lb).amax();
        let mut comp: f64 = 0.0;
        for (i, &lam) in m.ineq.iter().enumerate() {
            let (l, u) = self.ineq_bounds(i);
            let gap = if lam > 0.0 { pt.ci[i] - l } else { u - pt.ci[i] };
            if lam != 0.0 {
                comp = comp.max((lam * gap).abs());
            }
        }
        for (i, &lam) in m.lin.iter().enumerate() {
            let gap = if lam > 0.0 { pt.cl[i] - prob.linear.lower[i] } else { prob.linear.upper[i] - pt.cl[i] };
            if lam != 0.0 {
                comp = comp.max((lam * gap).abs());
            }
        }
        for (i, &lam) in m.bound.iter().enumerate() {
            let gap = if lam > 0.0 { pt.z[i] - prob.lower[i] } else { prob.upper[i] - pt.z[i] };
            if lam != 0.0 {
                comp = comp.max((lam * gap).abs());
            }
        }
        stationarity.max(comp).max(self.max_scaled_violation(pt))
    }

    fn unscale(&self, m: &Multipliers) -> Multipliers {
        let fs = self.scaling.objective;
        Multipliers {
            eq: m.eq.iter().zip(&self.scaling.equality).map(|(l, s)| l * s / fs).collect(),
            ineq: m.ineq.iter().zip(&self.scaling.inequality).map(|(l, s)| l * s / fs).collect(),
            lin: m.lin.iter().map(|l| l / fs).collect(),
            bound: m.bound.iter().map(|l| l / fs).collect(),
        }
    }

    fn finish(&self, pt: &Point, m: &Multipliers, status: SolveStatus, kkt: f64, iterations: usize, merit: Vec<MeritStep>) -> NlpSolution {
        let m = self.unscale(m);
        NlpSolution {
            objective: pt.f / self.scaling.objective,
            max_violation: self.problem.max_violation(&pt.z),
            z: pt.z.clone(),
            equality_multipliers: m.eq,
            inequality_multipliers: m.ineq,
            linear_multipliers: m.lin,
            bound_multipliers: m.bound,
            status,
            kkt_residual: kkt,
            iterations,
            merit_history: merit,
        }
    }

    fn run(self) -> Result<NlpSolution, NlpError> {
        let n = self.n;
        let tol = self.options.tol;
        let z0 = project(&self.problem.initial_guess, &self.problem.lower, &self.problem.upper);
        let mut pt = self.evaluate(z0)?;
        let mut h = DMatrix::<f64>::identity(n, n);
        let mut fresh_hessian = true;
        let mut penalty: f64 = 0.0;
        let mut merit_history = Vec::new();
        let mut last_mult = Multipliers::zeros(self.problem);
        let mut last_kkt = f64::INFINITY;
        let mut reset_streak = 0;
        let mut mu = 0.0;

        for iter in 0..self.options.max_iter {
            let mut h_qp = h.clone();
            for i in 0..n {
                h_qp[(i, i)] *= 1.0 + mu;
            }
            let floors = self.noise_floors(&pt);
            let step = self.solve_qp(&pt, &h_qp, &pt.ce, &pt.ci, penalty, &floors)?;
            let kkt = self.kkt_residual(&pt, &step.mult);
            last_kkt = kkt;
            last_mult = step.mult.clone();
            let unscaled_violation = self.problem.max_violation(&pt.z);
            trace!(
                "iter {iter}: f = {:.10e}, kkt = {kkt:.3e}, viol = {unscaled_violation:.3e}, |p| = {:.3e}",
                pt.f / self.scaling.objective,
                step.p.amax()
            );
            if kkt <= tol && unscaled_violation <= tol && !step.elastic {
                return Ok(self.finish(&pt, &step.mult, SolveStatus::Converged, kkt, iter, merit_history));
            }
            let viol0 = self.violation(&pt, None, &floors);
            if step.elastic && step.p.amax() <= 1e-12 * (1.0 + vec_amax(&pt.z)) && viol0 > tol {
                return Ok(self.finish(&pt, &step.mult, SolveStatus::Infeasible, kkt, iter, merit_history));
            }

            // Powell's rule: the penalty may relax once large early
            // multipliers have settled
            let needed = 1.1 * step.mult.norm_inf() + 1e-8;
            penalty = needed.max(0.5 * (penalty + needed));
            let lin_viol = self.violation(&pt, Some(&step.p), &floors);
            let merit0 = pt.f + penalty * viol0;
            let mut slope = pt.g.dot(&step.p) + penalty * (lin_viol - viol0);
            if slope >= 0.0 {
                // numerically flat; only accept decrease
                slope = -1e-16 * merit0.abs().max(1.0);
            }

            let accepted = self.line_search(&pt, &h_qp, &step, penalty, merit0, slope, &floors)?;
            let Some((new_pt, merit_after, alpha)) = accepted else {
                if fresh_hessian || reset_streak > 1 {
                    debug!("line search failed at iteration {iter} with a fresh Hessian");
                    return Ok(self.finish(&pt, &step.mult, SolveStatus::Stalled, kkt, iter, merit_history));
                }
                debug!("line search failed at iteration {iter}, resetting Hessian");
                h = DMatrix::identity(n, n);
                mu = 0.0;
                fresh_hessian = true;
                reset_streak += 1;
                continue;
            };
            reset_streak = 0;
            // short steps mean the model overshoots, so damp it like a trust
            // region; full steps relax the damping again
            mu = if alpha < 0.5 {
                (DAMPING_FACTOR * mu).clamp(MIN_DAMPING, MAX_DAMPING)
            } else if alpha == 1.0 && mu > 1e-3 * MIN_DAMPING {
                mu / DAMPING_FACTOR
            } else if alpha == 1.0 {
                0.0
            } else {
                mu
            };
            merit_history.push(MeritStep { penalty, before: merit0, after: merit_after });

            let s = DVector::from_iterator(n, new_pt.z.iter().zip(&pt.z).map(|(a, b)| a - b));
            let y = self.lagrangian_gradient(&new_pt, &step.mult) - self.lagrangian_gradient(&pt, &step.mult);
            if fresh_hessian {
                let sy = s.dot(&y);
                if sy > 0.0 {
                    h = DMatrix::identity(n, n) * (y.dot(&y) / sy).clamp(1e-6, 1e6);
                }
            }
            let previous = h.clone();
            bfgs_update(&mut h, &s, &y);
            if !well_conditioned(&h) {
                // the update lost definiteness to round-off
                h = previous;
            }
            fresh_hessian = false;
            pt = new_pt;
        }
        Ok(self.finish(&pt, &last_mult, SolveStatus::MaxIter, last_kkt, self.options.max_iter, merit_history))
    }

    fn merit(&self, pt: &Point, penalty: f64, floors: &Floors) -> f64 {
        pt.f + penalty * self.violation(pt, None, floors)
    }

    fn trial(&self, pt: &Point, p: &DVector<f64>, alpha: f64) -> Result<Point, NlpError> {
        let z: Vec<f64> = pt.z.iter().zip(p.iter()).map(|(z, p)| z + alpha * p).collect();
        let z = project(&z, &self.problem.lower, &self.problem.upper);
        self.evaluate(z)
    }

    fn line_search(
        &self,
        pt: &Point,
        h: &DMatrix<f64>,
        step: &QpStep,
        penalty: f64,
        merit0: f64,
        slope: f64,
        floors: &Floors,
    ) -> Result<Option<(Point, f64, f64)>, NlpError> {
        const ARMIJO: f64 = 1e-4;
        let mut alpha = 1.0;
        let mut merit_alpha = f64::INFINITY;
        if let Ok(full) = self.trial(pt, &step.p, 1.0) {
            let m = self.merit(&full, penalty, floors);
            merit_alpha = m;
            if m <= merit0 + ARMIJO * slope {
                return Ok(Some((full, m, 1.0)));
            }
            // a decrease below the merit's own rounding error cannot be
            // verified, so take the step as long as the merit stays within it
            let noise = MERIT_ROUNDING * merit0.abs().max(1.0);
            if -slope <= noise && m <= merit0 + noise {
                return Ok(Some((full, m, 1.0)));
            }
            // second-order correction
            if !step.elastic {
                let ce = &full.ce - &pt.je * &step.p;
                let ci = &full.ci - &pt.ji * &step.p;
                let (qp, _) = self.build_qp(pt, h, &ce, &ci, floors, None);
                if let Ok(sol) = qp.solve() {
                    if let Ok(corr) = self.trial(pt, &sol.x, 1.0) {
                        let mc = self.merit(&corr, penalty, floors);
                        if mc <= merit0 + ARMIJO * slope {
                            return Ok(Some((corr, mc, 1.0)));
                        }
                    }
                }
            }
        }
        loop {
            let interp = if merit_alpha.is_finite() {
                let denom = 2.0 * (merit_alpha - merit0 - slope * alpha);
                if denom > 0.0 {
                    -slope * alpha * alpha / denom
                } else {
                    0.5 * alpha
                }
            } else {
                0.1 * alpha
            };
            alpha = interp.clamp(0.1 * alpha, 0.5 * alpha);
            if alpha < 1e-12 {
                return Ok(None);
            }
            match self.trial(pt, &step.p, alpha) {
                Ok(trial) => {
                    merit_alpha = self.merit(&trial, penalty, floors);
                    if merit_alpha <= merit0 + ARMIJO * alpha * slope {
                        return Ok(Some((trial, merit_alpha, alpha)));
                    }
                }
                Err(NlpError::NonFinite(_)) => merit_alpha = f64::INFINITY,
                Err(e) => return Err(e),
            }
        }
    }
}

/// Powell-damped BFGS update; keeps `h` positive definite.
fn bfgs_update(h: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let hs = &*h * s;
    let shs = s.dot(&hs);
    if shs <= 1e-300 || s.amax() == 0.0 {
        return;
    }
    let sy = s.dot(y);
    let y = if sy < 0.2 * shs {
        let theta = 0.8 * shs / (shs - sy);
        y * theta + &hs * (1.0 - theta)
    } else {
        y.clone()
    };
    let sy = s.dot(&y);
    if sy <= 1e-300 {
        return;
    }
    h.ger(-1.0 / shs, &hs, &hs, 1.0);
    h.ger(1.0 / sy, &y, &y, 1.0);
    // symmetrize against round-off drift
    let ht = h.transpose();
    *h += ht;
    *h *= 0.5;
}

/// Positive definite with a Cholesky-diagonal condition estimate that the
/// QP solver can still work with.
fn well_conditioned(h: &DMatrix<f64>) -> bool {
    let Some(chol) = h.clone().cholesky() else {
        return false;
    };
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(*d), hi.max(*d)));
    lo * lo >= MAX_HESSIAN_CONDITION.recip() * hi * hi
}

fn scale_rows(m: &mut DMatrix<f64>, scale: &[f64]) {
    for (i, s) in scale.iter().enumerate() {
        m.row_mut(i).scale_mut(*s);
    }
}

fn project(z: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&l, &u))| {
            let v = if is_finite_bound(l) { v.max(l) } else { v };
            if is_finite_bound(u) {
                v.min(u)
            } else {
                v
            }
        })
        .collect()
}

fn vec_amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
