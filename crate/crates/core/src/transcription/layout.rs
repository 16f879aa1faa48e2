use serde::{Deserialize, Serialize};

/// Positions of states, inputs and free breakpoints in the flat NLP vector.
///
/// States occupy `(n_h n + 1) n_x` slots: point `j` of interval `i` maps to
/// global point `i n + j`, so the last point of interval `i` and the first
/// of `i + 1` are the same variable. Inputs follow, then breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionLayout {
    pub n: usize,
    pub n_h: usize,
    pub n_x: usize,
    pub n_u: usize,
    pub flexible: bool,
    /// Breakpoints used when they are not decision variables.
    pub nominal: Vec<f64>,
}

impl DecisionLayout {
    pub fn state_count(&self) -> usize {
        (self.n_h * self.n + 1) * self.n_x
    }

    pub fn input_count(&self) -> usize {
        self.n_h * self.n * self.n_u
    }

    pub fn mesh_count(&self) -> usize {
        if self.flexible {
            self.n_h - 1
        } else {
            0
        }
    }

    pub fn dimension(&self) -> usize {
        self.state_count() + self.input_count() + self.mesh_count()
    }

    /// `j` ranges over `0..=n`.
    pub fn state(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n_h && j <= self.n && k < self.n_x);
        (i * self.n + j) * self.n_x + k
    }

    /// `j` ranges over `0..n`.
    pub fn input(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n_h && j < self.n && k < self.n_u);
        self.state_count() + (i * self.n + j) * self.n_u + k
    }

    /// Interior breakpoint `i` in `1..n_h`, when flexible.
    pub fn breakpoint(&self, i: usize) -> Option<usize> {
        (self.flexible && i >= 1 && i < self.n_h).then(|| self.state_count() + self.input_count() + i - 1)
    }

    /// Full breakpoint vector `t0..tf` at `z`.
    pub fn breakpoints(&self, z: &[f64]) -> Vec<f64> {
        (0..=self.n_h).map(|i| self.breakpoint(i).map_or(self.nominal[i], |p| z[p])).collect()
    }
}
