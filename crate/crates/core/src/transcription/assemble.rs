use std::sync::Arc;

use flexcolloc_nlp::{is_finite_bound, Dual, LinearConstraints, NlpProblem};
use nalgebra::DMatrix;
use rand::Rng;

use super::dop::DopDefinition;
use super::layout::DecisionLayout;
use super::mesh::{ConstraintMode, FlexibleMesh};
use super::trajectory::{extract_trajectory, Trajectory};
use super::{gamma, TranscriptionError};
use crate::bernstein::binomial;
use crate::quadrature::{input_grid, lgr_nodes, state_grid, InterpolationGrid};

/// Maps interpolation values on `grid` to the Bernstein coefficients of the
/// interpolant on the normalized parameter `s = (tau + 1) / 2`.
///
/// Computed as the inverse of the Bernstein collocation matrix
/// `M_ij = b_{m,j}(s_i)`, which equals `B V^-1` but is far better
/// conditioned than the monomial Vandermonde matrix.
pub fn bernstein_transfer_matrix(grid: &InterpolationGrid) -> Result<DMatrix<f64>, TranscriptionError> {
    let m = grid.degree();
    let s: Vec<f64> = grid.points().iter().map(|t| 0.5 * t + 0.5).collect();
    let colloc = DMatrix::from_fn(m + 1, m + 1, |i, j| {
        binomial(m, j) * s[i].powi(j as i32) * (1.0 - s[i]).powi((m - j) as i32)
    });
    let mut c = colloc.try_inverse().ok_or(TranscriptionError::Singular)?;
    // the end coefficients of a Bernstein form are the endpoint values
    for (r, end) in [(0, 0.0), (m, 1.0)] {
        if s[r] == end {
            c.row_mut(r).fill(0.0);
            c[(r, r)] = 1.0;
        }
    }
    Ok(c)
}

/// A transcribed problem together with the data needed to interpret its
/// solution vector.
pub struct AssembledProblem {
    pub nlp: NlpProblem,
    pub layout: DecisionLayout,
    pub mesh: FlexibleMesh,
    pub mode: ConstraintMode,
    pub dop: DopDefinition,
}

impl AssembledProblem {
    pub fn trajectory(&self, z: &[f64]) -> Result<Trajectory, TranscriptionError> {
        extract_trajectory(&self.layout, z)
    }

    /// A starting point sampled from an earlier trajectory, e.g. the solution
    /// at a lower degree. Its breakpoints are reused when this mesh admits them.
    pub fn warm_start(&self, traj: &Trajectory) -> Result<Vec<f64>, TranscriptionError> {
        let l = &self.layout;
        if traj.n_x() != l.n_x || traj.n_u() != l.n_u {
            return Err(TranscriptionError::Dimension(format!(
                "trajectory has {} states and {} inputs, problem has {} and {}",
                traj.n_x(),
                traj.n_u(),
                l.n_x,
                l.n_u
            )));
        }
        let mut z = self.nlp.initial_guess.clone();
        if l.flexible && self.mesh.admits(traj.breakpoints(), 1e-12) {
            for i in 1..l.n_h {
                if let Some(p) = l.breakpoint(i) {
                    z[p] = traj.breakpoints()[i];
                }
            }
        }
        let bp = l.breakpoints(&z);
        let (sg, ug) = (state_grid(l.n)?, input_grid(l.n)?);
        for i in 0..l.n_h {
            for (j, &tau) in sg.points().iter().enumerate() {
                let x = traj.state(gamma(tau, bp[i], bp[i + 1])?);
                for k in 0..l.n_x {
                    z[l.state(i, j, k)] = x[k];
                }
            }
            for (j, &tau) in ug.points().iter().enumerate() {
                let u = traj.input(gamma(tau, bp[i], bp[i + 1])?);
                for k in 0..l.n_u {
                    z[l.input(i, j, k)] = u[k];
                }
            }
        }
        Ok(z.iter().zip(self.nlp.lower.iter().zip(&self.nlp.upper)).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect())
    }

    /// The initial guess with every entry moved by up to `scale` (relative
    /// to `max(1, |value|)`) and clamped to the variable bounds. Free
    /// breakpoints move by up to `scale` times the shortest admissible
    /// length, shrunk until the mesh admits them.
    pub fn perturbed_guess<R: Rng>(&self, rng: &mut R, scale: f64) -> Vec<f64> {
        let nlp = &self.nlp;
        let mut z: Vec<f64> = (0..nlp.dimension)
            .map(|p| {
                let z0 = nlp.initial_guess[p];
                let v = z0 + scale * z0.abs().max(1.0) * rng.gen_range(-1.0..=1.0);
                v.clamp(nlp.lower[p], nlp.upper[p])
            })
            .collect();
        let slots: Vec<usize> = (1..self.layout.n_h).filter_map(|i| self.layout.breakpoint(i)).collect();
        if slots.is_empty() {
            return z;
        }
        let step = scale * (0..self.mesh.intervals()).map(|i| self.mesh.length_bounds(i).0).fold(f64::INFINITY, f64::min);
        let shifts: Vec<f64> = slots.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut factor = 1.0;
        for _ in 0..40 {
            for (&p, s) in slots.iter().zip(&shifts) {
                z[p] = nlp.initial_guess[p] + factor * step * s;
            }
            if self.mesh.admits(&self.layout.breakpoints(&z), 0.0) {
                return z;
            }
            factor *= 0.5;
        }
        for &p in &slots {
            z[p] = nlp.initial_guess[p];
        }
        z
    }
}

struct Data {
    layout: DecisionLayout,
    weights: Vec<f64>,
    diff: Vec<Vec<f64>>,
    taus: Vec<f64>,
    dop: DopDefinition,
}

impl Data {
    fn bp(&self, z: &[Dual], i: usize) -> Dual {
        self.layout.breakpoint(i).map_or(Dual::constant(self.layout.nominal[i]), |p| z[p])
    }

    fn x(&self, z: &[Dual], i: usize, j: usize) -> Vec<Dual> {
        (0..self.layout.n_x).map(|k| z[self.layout.state(i, j, k)]).collect()
    }

    fn u(&self, z: &[Dual], i: usize, j: usize) -> Vec<Dual> {
        (0..self.layout.n_u).map(|k| z[self.layout.input(i, j, k)]).collect()
    }

    fn objective(&self, z: &[Dual]) -> Dual {
        let l = &self.layout;
        let mut total = Dual::constant(0.0);
        for i in 0..l.n_h {
            let (a, b) = (self.bp(z, i), self.bp(z, i + 1));
            let half = (b - a) * 0.5;
            let mut sum = Dual::constant(0.0);
            for j in 0..l.n {
                let t = half * self.taus[j] + (a + b) * 0.5;
                sum += (self.dop.running_cost)(&self.x(z, i, j), &self.u(z, i, j), t) * self.weights[j];
            }
            total += half * sum;
        }
        if let Some(m) = &self.dop.boundary_cost {
            total += m(&self.x(z, 0, 0), &self.x(z, l.n_h - 1, l.n));
        }
        total
    }

    fn equalities(&self, z: &[Dual]) -> Vec<Dual> {
        let l = &self.layout;
        let mut out = (self.dop.boundary_conditions)(&self.x(z, 0, 0), &self.x(z, l.n_h - 1, l.n));
        for i in 0..l.n_h {
            let (a, b) = (self.bp(z, i), self.bp(z, i + 1));
            let scale = 2.0 / (b - a);
            let samples: Vec<Vec<Dual>> = (0..=l.n).map(|j| self.x(z, i, j)).collect();
            for j in 0..l.n {
                let xdot: Vec<Dual> = (0..l.n_x)
                    .map(|k| scale * (0..=l.n).map(|q| samples[q][k] * self.diff[j][q]).sum::<Dual>())
                    .collect();
                let t = (b - a) * 0.5 * self.taus[j] + (a + b) * 0.5;
                let r = (self.dop.dynamics)(&xdot, &samples[j], &self.u(z, i, j), t);
                out.extend(r);
            }
        }
        out
    }
}

/// Build the collocation NLP for `dop` at degree `n` on `mesh`.
///
/// Only [`ConstraintMode::BernsteinFlexible`] makes breakpoints decision
/// variables; the other modes use the nominal mesh and ignore `phi`.
pub fn assemble(
    dop: &DopDefinition,
    n: usize,
    mesh: &FlexibleMesh,
    mode: ConstraintMode,
) -> Result<AssembledProblem, TranscriptionError> {
    if n == 0 {
        return Err(TranscriptionError::Degree);
    }
    dop.validate()?;
    if mesh.t0() != dop.t0 || mesh.tf() != dop.tf {
        return Err(TranscriptionError::Mesh(format!(
            "mesh spans [{}, {}] but the horizon is [{}, {}]",
            mesh.t0(),
            mesh.tf(),
            dop.t0,
            dop.tf
        )));
    }
    let n_h = mesh.intervals();
    let layout = DecisionLayout {
        n,
        n_h,
        n_x: dop.n_x,
        n_u: dop.n_u,
        flexible: mode == ConstraintMode::BernsteinFlexible && n_h > 1,
        nominal: mesh.nominal().to_vec(),
    };
    let sgrid = state_grid(n)?;
    let ugrid = input_grid(n)?;
    let lgr = lgr_nodes(n)?;
    let d = sgrid.differentiation_matrix();
    let data = Arc::new(Data {
        layout: layout.clone(),
        weights: lgr.weights.clone(),
        diff: (0..=n).map(|i| (0..=n).map(|j| d[(i, j)]).collect()).collect(),
        taus: lgr.nodes.clone(),
        dop: dop.clone(),
    });

    let dim = layout.dimension();
    let mut lower = vec![-f64::INFINITY; dim];
    let mut upper = vec![f64::INFINITY; dim];
    let mut linear = LinearConstraints::empty(dim);

    match mode {
        ConstraintMode::SamplePoints => {
            for i in 0..n_h {
                for j in 0..=n {
                    for k in 0..dop.n_x {
                        let p = layout.state(i, j, k);
                        lower[p] = dop.x_lower[k];
                        upper[p] = dop.x_upper[k];
                    }
                }
                for j in 0..n {
                    for k in 0..dop.n_u {
                        let p = layout.input(i, j, k);
                        lower[p] = dop.u_lower[k];
                        upper[p] = dop.u_upper[k];
                    }
                }
            }
        }
        ConstraintMode::BernsteinFixed | ConstraintMode::BernsteinFlexible => {
            let cs = bernstein_transfer_matrix(&sgrid)?;
            let cu = bernstein_transfer_matrix(&ugrid)?;
            for i in 0..n_h {
                for k in 0..dop.n_x {
                    let (lo, hi) = (dop.x_lower[k], dop.x_upper[k]);
                    if is_finite_bound(lo) || is_finite_bound(hi) {
                        // an interval's first coefficient is its predecessor's last
                        let skip = usize::from(i > 0);
                        push_block(&mut linear, &cs.rows(skip, n + 1 - skip).into_owned(), |j| layout.state(i, j, k), lo, hi);
                    }
                }
                for k in 0..dop.n_u {
                    let (lo, hi) = (dop.u_lower[k], dop.u_upper[k]);
                    if is_finite_bound(lo) || is_finite_bound(hi) {
                        push_block(&mut linear, &cu, |j| layout.input(i, j, k), lo, hi);
                    }
                }
            }
        }
    }

    if layout.flexible {
        let min_len = mesh.min_length();
        for i in 1..n_h {
            let p = layout.breakpoint(i).expect("flexible layout");
            lower[p] = mesh.t0() + min_len * i as f64;
            upper[p] = mesh.tf() - min_len * (n_h - i) as f64;
        }
        let mut rows = DMatrix::zeros(n_h, dim);
        let mut lo = Vec::with_capacity(n_h);
        let mut hi = Vec::with_capacity(n_h);
        for i in 0..n_h {
            let (l, h) = mesh.length_bounds(i);
            let mut shift = 0.0;
            match layout.breakpoint(i + 1) {
                Some(p) => rows[(i, p)] = 1.0,
                None => shift -= mesh.tf(),
            }
            match layout.breakpoint(i) {
                Some(p) => rows[(i, p)] = -1.0,
                None => shift += mesh.t0(),
            }
            lo.push(l + shift);
            hi.push(h + shift);
        }
        linear.extend(&rows, &lo, &hi);
    }

    let z0 = initial_guess(dop, &layout, &lower, &upper);
    let n_eq = dop.n_b + n_h * n * dop.n_r;
    let obj = data.clone();
    let eq = data;
    let nlp = NlpProblem::new(dim, move |z: &[Dual]| obj.objective(z))
        .with_equalities(n_eq, move |z: &[Dual]| eq.equalities(z))
        .with_linear(linear)
        .with_bounds(lower, upper)
        .with_initial_guess(z0);
    Ok(AssembledProblem { nlp, layout, mesh: mesh.clone(), mode, dop: dop.clone() })
}

fn push_block(linear: &mut LinearConstraints, c: &DMatrix<f64>, col: impl Fn(usize) -> usize, lo: f64, hi: f64) {
    let mut rows = DMatrix::zeros(c.nrows(), linear.rows.ncols());
    for r in 0..c.nrows() {
        for j in 0..c.ncols() {
            rows[(r, col(j))] = c[(r, j)];
        }
    }
    linear.extend(&rows, &vec![lo; c.nrows()], &vec![hi; c.nrows()]);
}

/// States interpolate the known boundary values linearly in time (or hold
/// the one known value), inputs start at zero, breakpoints at nominal.
fn initial_guess(dop: &DopDefinition, layout: &DecisionLayout, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; layout.dimension()];
    let taus: Vec<f64> = state_grid(layout.n).map(|g| g.points().to_vec()).unwrap_or_default();
    let span = dop.tf - dop.t0;
    for i in 0..layout.n_h {
        let (a, b) = (layout.nominal[i], layout.nominal[i + 1]);
        for (j, tau) in taus.iter().enumerate() {
            let t = 0.5 * (b - a) * tau + 0.5 * (a + b);
            let frac = (t - dop.t0) / span;
            for k in 0..layout.n_x {
                z[layout.state(i, j, k)] = match (dop.x0_hint[k], dop.xf_hint[k]) {
                    (Some(x0), Some(xf)) => x0 + frac * (xf - x0),
                    (Some(v), None) | (None, Some(v)) => v,
                    (None, None) => 0.0,
                };
            }
        }
    }
    for i in 1..layout.n_h {
        if let Some(p) = layout.breakpoint(i) {
            z[p] = layout.nominal[i];
        }
    }
    for ((zi, l), u) in z.iter_mut().zip(lower).zip(upper) {
        *zi = zi.max(*l).min(*u);
    }
    z
}
