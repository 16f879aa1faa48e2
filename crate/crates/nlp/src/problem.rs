use nalgebra::{DMatrix, DVector};

use crate::derivatives::Differentiation;
use crate::dual::Dual;

/// Bounds at or beyond this magnitude are treated as absent.
pub const INFINITE_BOUND: f64 = 1e19;

pub fn is_finite_bound(b: f64) -> bool {
    b.abs() < INFINITE_BOUND
}

pub type ScalarFn = Box<dyn Fn(&[Dual]) -> Dual + Send + Sync>;
pub type VectorFn = Box<dyn Fn(&[Dual]) -> Vec<Dual> + Send + Sync>;

pub struct NonlinearConstraints {
    pub len: usize,
    pub eval: VectorFn,
}

/// `lower <= rows * z <= upper`; rows with `lower == upper` are equalities.
#[derive(Clone, Debug)]
pub struct LinearConstraints {
    pub rows: DMatrix<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearConstraints {
    pub fn empty(n: usize) -> Self {
        Self { rows: DMatrix::zeros(0, n), lower: Vec::new(), upper: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Append rows; `rows` must have the program's column count.
    pub fn extend(&mut self, rows: &DMatrix<f64>, lower: &[f64], upper: &[f64]) {
        assert_eq!(rows.ncols(), self.rows.ncols());
        assert_eq!(rows.nrows(), lower.len());
        assert_eq!(rows.nrows(), upper.len());
        let old = self.rows.nrows();
        let mut grown = DMatrix::zeros(old + rows.nrows(), rows.ncols());
        grown.rows_mut(0, old).copy_from(&self.rows);
        grown.rows_mut(old, rows.nrows()).copy_from(rows);
        self.rows = grown;
        self.lower.extend_from_slice(lower);
        self.upper.extend_from_slice(upper);
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let zv = DVector::from_column_slice(z);
        (&self.rows * zv).iter().copied().collect()
    }
}

/// A smooth nonlinear program
///
/// ```text
///     minimize     f(z)
///     subject to   c_E(z) = 0
///                  l_I <= c_I(z) <= u_I
///                  l_L <= A z <= u_L
///                  l_z <= z <= u_z
/// ```
pub struct NlpProblem {
    pub dimension: usize,
    pub objective: ScalarFn,
    pub equalities: NonlinearConstraints,
    pub inequalities: NonlinearConstraints,
    pub inequality_lower: Vec<f64>,
    pub inequality_upper: Vec<f64>,
    pub linear: LinearConstraints,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub initial_guess: Vec<f64>,
    pub differentiation: Differentiation,
}

impl NlpProblem {
    pub fn new(dimension: usize, objective: impl Fn(&[Dual]) -> Dual + Send + Sync + 'static) -> Self {
        Self {
            dimension,
            objective: Box::new(objective),
            equalities: NonlinearConstraints { len: 0, eval: Box::new(|_| Vec::new()) },
            inequalities: NonlinearConstraints { len: 0, eval: Box::new(|_| Vec::new()) },
            inequality_lower: Vec::new(),
            inequality_upper: Vec::new(),
            linear: LinearConstraints::empty(dimension),
            lower: vec![-f64::INFINITY; dimension],
            upper: vec![f64::INFINITY; dimension],
            initial_guess: vec![0.0; dimension],
            differentiation: Differentiation::Forward,
        }
    }

    pub fn with_equalities(
        mut self,
        len: usize,
        eval: impl Fn(&[Dual]) -> Vec<Dual> + Send + Sync + 'static,
    ) -> Self {
        self.equalities = NonlinearConstraints { len, eval: Box::new(eval) };
        self
    }

    pub fn with_inequalities(
        mut self,
        lower: Vec<f64>,
        upper: Vec<f64>,
        eval: impl Fn(&[Dual]) -> Vec<Dual> + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(lower.len(), upper.len());
        self.inequalities = NonlinearConstraints { len: lower.len(), eval: Box::new(eval) };
        self.inequality_lower = lower;
        self.inequality_upper = upper;
        self
    }

    pub fn with_linear(mut self, linear: LinearConstraints) -> Self {
        self.linear = linear;
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_initial_guess(mut self, z0: Vec<f64>) -> Self {
        self.initial_guess = z0;
        self
    }

    pub fn with_differentiation(mut self, d: Differentiation) -> Self {
        self.differentiation = d;
        self
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        (self.objective)(&crate::dual::constants(z)).re
    }

    pub fn equality_values(&self, z: &[f64]) -> Vec<f64> {
        crate::dual::values(&(self.equalities.eval)(&crate::dual::constants(z)))
    }

    pub fn inequality_values(&self, z: &[f64]) -> Vec<f64> {
        crate::dual::values(&(self.inequalities.eval)(&crate::dual::constants(z)))
    }

    /// Largest violation of any constraint or bound, in the program's own units.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for c in self.equality_values(z) {
            v = v.max(c.abs());
        }
        let ci = self.inequality_values(z);
        for ((c, l), u) in ci.iter().zip(&self.inequality_lower).zip(&self.inequality_upper) {
            v = v.max(l - c).max(c - u);
        }
        let cl = self.linear.eval(z);
        for ((c, l), u) in cl.iter().zip(&self.linear.lower).zip(&self.linear.upper) {
            v = v.max(l - c).max(c - u);
        }
        for ((zi, l), u) in z.iter().zip(&self.lower).zip(&self.upper) {
            v = v.max(l - zi).max(zi - u);
        }
        v
    }

    pub(crate) fn check_dimensions(&self) -> Result<(), crate::NlpError> {
        let n = self.dimension;
        let ok = self.lower.len() == n
            && self.upper.len() == n
            && self.initial_guess.len() == n
            && self.linear.rows.ncols() == n
            && self.inequality_lower.len() == self.inequalities.len;
        if ok {
            Ok(())
        } else {
            Err(crate::NlpError::Dimension(format!(
                "dimension {n}: bounds {}/{}, guess {}, linear cols {}",
                self.lower.len(),
                self.upper.len(),
                self.initial_guess.len(),
                self.linear.rows.ncols()
            )))
        }
    }
}
