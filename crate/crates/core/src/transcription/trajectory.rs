use serde::{Deserialize, Serialize};

use super::layout::DecisionLayout;
use super::{gamma_inv, TranscriptionError};
use crate::quadrature::{input_grid, state_grid, InterpolationGrid};

/// Plain data behind a [`Trajectory`]: resolved breakpoints and samples,
/// indexed `[interval][component][grid point]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryData {
    pub n: usize,
    pub breakpoints: Vec<f64>,
    pub states: Vec<Vec<Vec<f64>>>,
    pub inputs: Vec<Vec<Vec<f64>>>,
}

/// One dense sample of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Piecewise-polynomial state and input trajectories of a solved
/// collocation problem.
#[derive(Clone, Debug)]
pub struct Trajectory {
    data: TrajectoryData,
    sgrid: InterpolationGrid,
    ugrid: InterpolationGrid,
}

impl Trajectory {
    pub fn from_data(data: TrajectoryData) -> Result<Self, TranscriptionError> {
        let n_h = data.breakpoints.len().saturating_sub(1);
        if n_h == 0 || data.states.len() != n_h || data.inputs.len() != n_h {
            return Err(TranscriptionError::Dimension(format!(
                "{} breakpoints, {} state blocks, {} input blocks",
                data.breakpoints.len(),
                data.states.len(),
                data.inputs.len()
            )));
        }
        if data.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(TranscriptionError::Mesh(format!("breakpoints {:?} not increasing", data.breakpoints)));
        }
        let sgrid = state_grid(data.n)?;
        let ugrid = input_grid(data.n)?;
        let n_x = data.states[0].len();
        let n_u = data.inputs[0].len();
        let ok = data.states.iter().all(|s| s.len() == n_x && s.iter().all(|c| c.len() == sgrid.len()))
            && data.inputs.iter().all(|s| s.len() == n_u && s.iter().all(|c| c.len() == ugrid.len()));
        if !ok {
            return Err(TranscriptionError::Dimension("ragged sample blocks".into()));
        }
        Ok(Self { data, sgrid, ugrid })
    }

    pub fn data(&self) -> &TrajectoryData {
        &self.data
    }

    pub fn into_data(self) -> TrajectoryData {
        self.data
    }

    pub fn degree(&self) -> usize {
        self.data.n
    }

    pub fn intervals(&self) -> usize {
        self.data.states.len()
    }

    pub fn n_x(&self) -> usize {
        self.data.states[0].len()
    }

    pub fn n_u(&self) -> usize {
        self.data.inputs[0].len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.data.breakpoints
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.data.breakpoints[i], self.data.breakpoints[i + 1])
    }

    /// Interval containing `t`; breakpoints belong to the interval on their right.
    pub fn locate(&self, t: f64) -> usize {
        let bp = &self.data.breakpoints;
        bp[1..bp.len() - 1].partition_point(|&b| b <= t)
    }

    fn tau(&self, i: usize, t: f64) -> f64 {
        let (a, b) = self.interval(i);
        gamma_inv(t, a, b)
    }

    /// State of interval `i`'s polynomial at `t` (may lie outside the interval).
    pub fn state_on(&self, i: usize, t: f64) -> Vec<f64> {
        let tau = self.tau(i, t);
        self.data.states[i].iter().map(|c| self.sgrid.interpolate_unchecked(c, tau)).collect()
    }

    pub fn input_on(&self, i: usize, t: f64) -> Vec<f64> {
        let tau = self.tau(i, t);
        self.data.inputs[i].iter().map(|c| self.ugrid.interpolate_unchecked(c, tau)).collect()
    }

    pub fn state_rate_on(&self, i: usize, t: f64) -> Vec<f64> {
        let (a, b) = self.interval(i);
        let tau = self.tau(i, t);
        self.data.states[i]
            .iter()
            .map(|c| 2.0 / (b - a) * self.sgrid.derivative_at(c, tau).expect("sample length checked"))
            .collect()
    }

    pub fn state(&self, t: f64) -> Vec<f64> {
        self.state_on(self.locate(t), t)
    }

    pub fn input(&self, t: f64) -> Vec<f64> {
        self.input_on(self.locate(t), t)
    }

    pub fn state_rate(&self, t: f64) -> Vec<f64> {
        self.state_rate_on(self.locate(t), t)
    }

    /// `per_interval` equally spaced samples on each closed sub-interval,
    /// evaluated with that sub-interval's polynomials.
    pub fn dense_samples(&self, per_interval: usize) -> Vec<TrajectorySample> {
        let mut out = Vec::with_capacity(per_interval * self.intervals());
        for i in 0..self.intervals() {
            let (a, b) = self.interval(i);
            for q in 0..per_interval {
                let t = if per_interval == 1 { a } else { a + (b - a) * q as f64 / (per_interval - 1) as f64 };
                out.push(TrajectorySample { t, x: self.state_on(i, t), u: self.input_on(i, t) });
            }
        }
        out
    }
}

/// Read the trajectory encoded by solution vector `z`.
pub fn extract_trajectory(layout: &DecisionLayout, z: &[f64]) -> Result<Trajectory, TranscriptionError> {
    if z.len() != layout.dimension() {
        return Err(TranscriptionError::Dimension(format!(
            "solution has {} entries, layout expects {}",
            z.len(),
            layout.dimension()
        )));
    }
    let states = (0..layout.n_h)
        .map(|i| (0..layout.n_x).map(|k| (0..=layout.n).map(|j| z[layout.state(i, j, k)]).collect()).collect())
        .collect();
    let inputs = (0..layout.n_h)
        .map(|i| (0..layout.n_u).map(|k| (0..layout.n).map(|j| z[layout.input(i, j, k)]).collect()).collect())
        .collect();
    Trajectory::from_data(TrajectoryData { n: layout.n, breakpoints: layout.breakpoints(z), states, inputs })
}
