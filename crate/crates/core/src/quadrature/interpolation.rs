use nalgebra::DMatrix;

use super::nodes::lgr_nodes;
use super::QuadratureError;

/// Lagrange interpolation on a fixed set of distinct points in `[-1, 1]`,
/// in barycentric form, with its differentiation matrix.
#[derive(Clone, Debug)]
pub struct InterpolationGrid {
    points: Vec<f64>,
    bary: Vec<f64>,
    diff: DMatrix<f64>,
}

impl InterpolationGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, QuadratureError> {
        if points.is_empty() {
            return Err(QuadratureError::InvalidCount { kind: "grid", count: 0, min: 1 });
        }
        let m = points.len();
        for i in 0..m {
            for j in i + 1..m {
                if points[i] == points[j] {
                    return Err(QuadratureError::DuplicatePoint(points[i]));
                }
            }
        }
        let bary: Vec<f64> = (0..m)
            .map(|j| {
                let prod: f64 = (0..m).filter(|&k| k != j).map(|k| points[j] - points[k]).product();
                1.0 / prod
            })
            .collect();
        let mut diff = DMatrix::zeros(m, m);
        for i in 0..m {
            let mut row_sum = 0.0;
            for j in 0..m {
                if i != j {
                    let d = (bary[j] / bary[i]) / (points[i] - points[j]);
                    diff[(i, j)] = d;
                    row_sum += d;
                }
            }
            diff[(i, i)] = -row_sum;
        }
        Ok(Self { points, bary, diff })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.points.len() - 1
    }

    pub fn barycentric_weights(&self) -> &[f64] {
        &self.bary
    }

    pub fn differentiation_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// Values of the Lagrange basis polynomials at `tau`.
    pub fn basis_at(&self, tau: f64) -> Vec<f64> {
        if let Some(j) = self.points.iter().position(|&p| p == tau) {
            let mut e = vec![0.0; self.len()];
            e[j] = 1.0;
            return e;
        }
        let terms: Vec<f64> = self.points.iter().zip(&self.bary).map(|(&p, &w)| w / (tau - p)).collect();
        let denom: f64 = terms.iter().sum();
        terms.iter().map(|t| t / denom).collect()
    }

    pub fn interpolate(&self, values: &[f64], tau: f64) -> Result<f64, QuadratureError> {
        self.check_len(values.len())?;
        Ok(self.interpolate_unchecked(values, tau))
    }

    pub(crate) fn interpolate_unchecked(&self, values: &[f64], tau: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&p, &w), &v) in self.points.iter().zip(&self.bary).zip(values) {
            let d = tau - p;
            if d == 0.0 {
                return v;
            }
            let t = w / d;
            num += t * v;
            den += t;
        }
        num / den
    }

    /// Derivative samples `D * values` at the grid points.
    pub fn differentiate(&self, values: &[f64]) -> Result<Vec<f64>, QuadratureError> {
        self.check_len(values.len())?;
        Ok((0..self.len())
            .map(|i| (0..self.len()).map(|j| self.diff[(i, j)] * values[j]).sum())
            .collect())
    }

    /// Derivative of the interpolant at an arbitrary `tau`.
    pub fn derivative_at(&self, values: &[f64], tau: f64) -> Result<f64, QuadratureError> {
        let d = self.differentiate(values)?;
        Ok(self.interpolate_unchecked(&d, tau))
    }

    fn check_len(&self, len: usize) -> Result<(), QuadratureError> {
        if len != self.len() {
            return Err(QuadratureError::LengthMismatch { expected: self.len(), got: len });
        }
        Ok(())
    }
}

/// The `n` LGR collocation points plus `+1`: the state interpolation grid of
/// a degree-`n` collocation interval.
pub fn state_grid(n: usize) -> Result<InterpolationGrid, QuadratureError> {
    let mut pts = lgr_nodes(n)?.nodes;
    pts.push(1.0);
    InterpolationGrid::new(pts)
}

/// The `n` LGR collocation points: the input interpolation grid.
pub fn input_grid(n: usize) -> Result<InterpolationGrid, QuadratureError> {
    InterpolationGrid::new(lgr_nodes(n)?.nodes)
}
