use serde::{Deserialize, Serialize};

use super::TranscriptionError;

/// Sub-interval lengths never drop below this fraction of the horizon.
pub const MIN_LENGTH_FRACTION: f64 = 1e-3;

/// How inequality constraints on states and inputs are enforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintMode {
    /// (a) boxes on the raw interpolation samples, fixed mesh.
    SamplePoints,
    /// (b) boxes on Bernstein coefficients, fixed mesh.
    BernsteinFixed,
    /// (c) boxes on Bernstein coefficients, breakpoints are decision variables.
    BernsteinFlexible,
}

impl ConstraintMode {
    pub fn letter(self) -> char {
        match self {
            ConstraintMode::SamplePoints => 'a',
            ConstraintMode::BernsteinFixed => 'b',
            ConstraintMode::BernsteinFlexible => 'c',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "a" => Some(ConstraintMode::SamplePoints),
            "b" => Some(ConstraintMode::BernsteinFixed),
            "c" => Some(ConstraintMode::BernsteinFlexible),
            _ => None,
        }
    }

    pub fn is_bernstein(self) -> bool {
        self != ConstraintMode::SamplePoints
    }
}

/// Nominal breakpoints `t0 = t_0 < ... < t_nh = tf` plus per-interval
/// flexibility parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlexibleMesh {
    nominal: Vec<f64>,
    phi: Vec<f64>,
}

impl FlexibleMesh {
    pub fn new(nominal: Vec<f64>, phi: Vec<f64>) -> Result<Self, TranscriptionError> {
        if nominal.len() < 2 {
            return Err(TranscriptionError::Mesh("need at least one sub-interval".into()));
        }
        if phi.len() != nominal.len() - 1 {
            return Err(TranscriptionError::Mesh(format!(
                "{} flexibility parameters for {} sub-intervals",
                phi.len(),
                nominal.len() - 1
            )));
        }
        if let Some(p) = phi.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(TranscriptionError::Mesh(format!("flexibility {p} outside [0, 1)")));
        }
        let span = nominal[nominal.len() - 1] - nominal[0];
        let min_len = MIN_LENGTH_FRACTION * span;
        if nominal.windows(2).any(|w| !(w[1] - w[0] >= min_len) || !(w[1] > w[0])) {
            return Err(TranscriptionError::Mesh(format!("nominal breakpoints {nominal:?} are degenerate")));
        }
        Ok(Self { nominal, phi })
    }

    pub fn equispaced(t0: f64, tf: f64, n_h: usize, phi: f64) -> Result<Self, TranscriptionError> {
        if n_h == 0 {
            return Err(TranscriptionError::Mesh("need at least one sub-interval".into()));
        }
        if !(t0 < tf) {
            return Err(TranscriptionError::DegenerateInterval(t0, tf));
        }
        let nominal = (0..=n_h)
            .map(|i| if i == n_h { tf } else { t0 + (tf - t0) * i as f64 / n_h as f64 })
            .collect();
        Self::new(nominal, vec![phi; n_h])
    }

    pub fn intervals(&self) -> usize {
        self.phi.len()
    }

    pub fn nominal(&self) -> &[f64] {
        &self.nominal
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn t0(&self) -> f64 {
        self.nominal[0]
    }

    pub fn tf(&self) -> f64 {
        self.nominal[self.nominal.len() - 1]
    }

    pub fn min_length(&self) -> f64 {
        MIN_LENGTH_FRACTION * (self.tf() - self.t0())
    }

    /// Admissible length range of sub-interval `i` (zero based).
    pub fn length_bounds(&self, i: usize) -> (f64, f64) {
        let nominal = self.nominal[i + 1] - self.nominal[i];
        let phi = self.phi[i];
        let lo = ((1.0 - phi) * nominal).max(self.min_length());
        let hi = phi * (self.tf() - self.t0()) + (1.0 - phi) * nominal;
        (lo.min(hi), hi)
    }

    /// Whether a full breakpoint vector satisfies every length bound to `tol`.
    pub fn admits(&self, breakpoints: &[f64], tol: f64) -> bool {
        breakpoints.len() == self.nominal.len()
            && breakpoints[0] == self.t0()
            && breakpoints[breakpoints.len() - 1] == self.tf()
            && breakpoints.windows(2).enumerate().all(|(i, w)| {
                let (lo, hi) = self.length_bounds(i);
                let len = w[1] - w[0];
                len >= lo - tol && len <= hi + tol
            })
    }
}
