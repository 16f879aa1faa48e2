use std::f64::consts::PI;
use std::sync::Arc;

use flexcolloc_nlp::{Dual, LinearConstraints, NlpProblem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate_adaptive, lgl_nodes, InterpolationGrid, QuadratureError};
use crate::transcription::{bernstein_transfer_matrix, gamma_inv, FlexibleMesh, TranscriptionError};

pub const SINE_INTERVALS: usize = 3;
/// Flexibility used for the flexible variant.
pub const SINE_FLEXIBILITY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SineMesh {
    Equispaced,
    Flexible,
}

/// Piecewise-polynomial least-squares fit of `sin(2 pi t)` on `[0, 1]`.
///
/// Each of the three pieces is a degree-`n_p` interpolant on `n_p + 1` LGL
/// points. Pieces are independent: no continuity is imposed between them.
pub struct SineApproximation {
    pub n_p: usize,
    pub mesh: FlexibleMesh,
    pub mesh_mode: SineMesh,
    pub constrained: bool,
    pub nlp: NlpProblem,
    grid: InterpolationGrid,
}

fn target(t: f64) -> f64 {
    (2.0 * PI * t).sin()
}

impl SineApproximation {
    fn values_per_piece(&self) -> usize {
        self.n_p + 1
    }

    fn mesh_offset(&self) -> usize {
        SINE_INTERVALS * self.values_per_piece()
    }

    pub fn breakpoints(&self, z: &[f64]) -> Vec<f64> {
        let nominal = self.mesh.nominal();
        (0..=SINE_INTERVALS)
            .map(|i| match self.mesh_mode {
                SineMesh::Flexible if i > 0 && i < SINE_INTERVALS => z[self.mesh_offset() + i - 1],
                _ => nominal[i],
            })
            .collect()
    }

    pub fn piece(&self, z: &[f64], i: usize) -> Vec<f64> {
        let m = self.values_per_piece();
        z[i * m..(i + 1) * m].to_vec()
    }

    /// Value of the fitted function; breakpoints belong to the right piece.
    pub fn eval(&self, z: &[f64], t: f64) -> f64 {
        let bp = self.breakpoints(z);
        let i = bp[1..SINE_INTERVALS].partition_point(|&b| b <= t);
        self.grid.interpolate_unchecked(&self.piece(z, i), gamma_inv(t, bp[i], bp[i + 1]))
    }

    /// `sqrt(int_0^1 (sin 2 pi t - y(t))^2 dt)` by adaptive quadrature per
    /// piece. The absolute tolerance on the squared error keeps spectrally
    /// small errors from chasing round-off; it moves the result by at most 1e-12.
    pub fn l2_error(&self, z: &[f64]) -> Result<f64, QuadratureError> {
        let bp = self.breakpoints(z);
        let mut total = 0.0;
        for i in 0..SINE_INTERVALS {
            let (a, b) = (bp[i], bp[i + 1]);
            let vals = self.piece(z, i);
            let err = integrate_adaptive(
                |t| (target(t) - self.grid.interpolate_unchecked(&vals, gamma_inv(t, a, b))).powi(2),
                a,
                b,
                1e-10,
                1e-24,
            )?;
            total += err.value;
        }
        Ok(total.sqrt())
    }

    /// Fix the two interior breakpoints of a flexible fit, for example to
    /// compare against another fit on the same partition.
    pub fn pin_breakpoints(&mut self, interior: [f64; 2]) -> Result<(), TranscriptionError> {
        if self.mesh_mode != SineMesh::Flexible {
            return Err(TranscriptionError::Mesh("only a flexible fit has breakpoint variables".into()));
        }
        let bp = [0.0, interior[0], interior[1], 1.0];
        if !self.mesh.admits(&bp, 0.0) {
            return Err(TranscriptionError::Mesh(format!("breakpoints {bp:?} violate the length bounds")));
        }
        for (i, v) in interior.into_iter().enumerate() {
            let p = self.mesh_offset() + i;
            self.nlp.lower[p] = v;
            self.nlp.upper[p] = v;
            self.nlp.initial_guess[p] = v;
        }
        Ok(())
    }

    /// Largest `|y(t)|` over a uniform grid of each piece.
    pub fn max_abs(&self, z: &[f64], per_piece: usize) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..SINE_INTERVALS {
            let vals = self.piece(z, i);
            for q in 0..=per_piece {
                let tau = -1.0 + 2.0 * q as f64 / per_piece as f64;
                m = m.max(self.grid.interpolate_unchecked(&vals, tau).abs());
            }
        }
        m
    }
}

pub fn sine_approximation(n_p: usize, mesh_mode: SineMesh, constrained: bool) -> Result<SineApproximation, TranscriptionError> {
    if n_p == 0 {
        return Err(TranscriptionError::Degree);
    }
    let phi = match mesh_mode {
        SineMesh::Equispaced => 0.0,
        SineMesh::Flexible => SINE_FLEXIBILITY,
    };
    let mesh = FlexibleMesh::equispaced(0.0, 1.0, SINE_INTERVALS, phi)?;
    let grid = InterpolationGrid::new(lgl_nodes(n_p + 1)?.nodes)?;
    let quad = lgl_nodes(n_p + 3)?;
    let m = n_p + 1;
    let n_mesh = if mesh_mode == SineMesh::Flexible { SINE_INTERVALS - 1 } else { 0 };
    let dim = SINE_INTERVALS * m + n_mesh;

    // interpolation weights from the piece's samples to each quadrature point
    let basis: Vec<Vec<f64>> = quad.nodes.iter().map(|&tau| grid.basis_at(tau)).collect();
    let nominal = mesh.nominal().to_vec();
    let quad_nodes = quad.nodes.clone();
    let quad_weights = quad.weights.clone();
    let flexible = mesh_mode == SineMesh::Flexible;
    let bp = move |z: &[Dual], i: usize| -> Dual {
        if flexible && i > 0 && i < SINE_INTERVALS {
            z[SINE_INTERVALS * m + i - 1]
        } else {
            Dual::constant(nominal[i])
        }
    };
    let basis = Arc::new(basis);
    let objective = move |z: &[Dual]| {
        let mut total = Dual::constant(0.0);
        for i in 0..SINE_INTERVALS {
            let (a, b) = (bp(z, i), bp(z, i + 1));
            let half = (b - a) * 0.5;
            let mut sum = Dual::constant(0.0);
            for (q, (&tau, &w)) in quad_nodes.iter().zip(&quad_weights).enumerate() {
                let t = half * tau + (a + b) * 0.5;
                let y: Dual = basis[q].iter().enumerate().map(|(j, &l)| z[i * m + j] * l).sum();
                sum += ((2.0 * PI * t).sin() - y).square() * w;
            }
            total += half * sum;
        }
        total
    };

    let mut linear = LinearConstraints::empty(dim);
    if constrained {
        let c = bernstein_transfer_matrix(&grid)?;
        for i in 0..SINE_INTERVALS {
            let mut rows = DMatrix::zeros(m, dim);
            for r in 0..m {
                for j in 0..m {
                    rows[(r, i * m + j)] = c[(r, j)];
                }
            }
            linear.extend(&rows, &vec![-1.0; m], &vec![1.0; m]);
        }
    }
    let mut lower = vec![-f64::INFINITY; dim];
    let mut upper = vec![f64::INFINITY; dim];
    let mut z0 = vec![0.0; dim];
    if flexible {
        let min_len = mesh.min_length();
        let mut rows = DMatrix::zeros(SINE_INTERVALS, dim);
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for i in 0..SINE_INTERVALS {
            let (l, h) = mesh.length_bounds(i);
            let mut shift = 0.0;
            if i + 1 < SINE_INTERVALS {
                rows[(i, SINE_INTERVALS * m + i)] = 1.0;
            } else {
                shift -= 1.0;
            }
            if i > 0 {
                rows[(i, SINE_INTERVALS * m + i - 1)] = -1.0;
            }
            lo.push(l + shift);
            hi.push(h + shift);
        }
        linear.extend(&rows, &lo, &hi);
        for i in 1..SINE_INTERVALS {
            let p = SINE_INTERVALS * m + i - 1;
            lower[p] = min_len * i as f64;
            upper[p] = 1.0 - min_len * (SINE_INTERVALS - i) as f64;
            z0[p] = mesh.nominal()[i];
        }
    }
    // start from the target sampled at the nominal interpolation points
    for i in 0..SINE_INTERVALS {
        let (a, b) = (mesh.nominal()[i], mesh.nominal()[i + 1]);
        for (j, &tau) in grid.points().iter().enumerate() {
            z0[i * m + j] = target(0.5 * (b - a) * tau + 0.5 * (a + b));
        }
    }
    let nlp = NlpProblem::new(dim, objective).with_linear(linear).with_bounds(lower, upper).with_initial_guess(z0);
    Ok(SineApproximation { n_p, mesh, mesh_mode, constrained, nlp, grid })
}
