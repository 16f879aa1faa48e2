//! Bernstein-basis representation of univariate polynomials, convex-hull
//! bounds, and the tight-partition search for monotonic polynomials.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default limit on the number of pieces returned by [`tight_partition`].
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 64;

/// Halvings attempted for a single piece before giving up.
const MAX_HALVINGS: usize = 60;

/// Relative tolerance when deciding whether an endpoint coefficient is the
/// extreme one.
const TIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BernsteinError {
    #[error("polynomial needs at least one coefficient")]
    Empty,
    #[error("basis index {index} out of range for degree {degree}")]
    IndexOutOfRange { index: usize, degree: usize },
    #[error("parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("cannot lower degree from {from} to {to}")]
    DegreeTooLow { from: usize, to: usize },
    #[error("interval [{a}, {b}] is degenerate")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("polynomial is not monotonic on [{a}, {b}]")]
    NotMonotonic { a: f64, b: f64 },
    #[error("tight partition needs more than {budget} pieces")]
    BudgetExceeded { budget: usize },
    #[error("interpolation data: {0}")]
    Interpolation(String),
}

/// Monomial coefficients `alpha_0 + alpha_1 t + ...`; trailing zeros allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, BernsteinError> {
        if coeffs.is_empty() {
            return Err(BernsteinError::Empty);
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// The unique polynomial of degree `points.len() - 1` through the data.
    pub fn interpolate(points: &[f64], values: &[f64]) -> Result<Self, BernsteinError> {
        if points.is_empty() || points.len() != values.len() {
            return Err(BernsteinError::Interpolation(format!(
                "{} points, {} values",
                points.len(),
                values.len()
            )));
        }
        let m = points.len();
        let v = DMatrix::from_fn(m, m, |i, k| points[i].powi(k as i32));
        let coeffs = v
            .lu()
            .solve(&DVector::from_column_slice(values))
            .ok_or_else(|| BernsteinError::Interpolation("repeated points".into()))?;
        Ok(Self { coeffs: coeffs.iter().copied().collect() })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::constant(0.0);
        }
        Polynomial {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect(),
        }
    }
}

/// Bernstein coefficients `beta_0..beta_n` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinForm {
    coeffs: Vec<f64>,
}

impl BernsteinForm {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, BernsteinError> {
        if coeffs.is_empty() {
            return Err(BernsteinError::Empty);
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Direct basis sum. `t` is not range checked here.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.degree();
        self.coeffs.iter().enumerate().map(|(j, b)| b * basis(n, j, t)).sum()
    }

    pub fn hull(&self) -> HullBounds {
        hull_bounds(self)
    }

    pub fn to_monomial(&self) -> Polynomial {
        let n = self.degree();
        let coeffs = (0..=n)
            .map(|k| {
                let sum: f64 = (0..=k)
                    .map(|j| {
                        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * binomial(k, j) * self.coeffs[j]
                    })
                    .sum();
                binomial(n, k) * sum
            })
            .collect();
        Polynomial { coeffs }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullBounds {
    pub lower: f64,
    pub upper: f64,
    pub tight_lower: bool,
    pub tight_upper: bool,
}

impl HullBounds {
    pub fn is_tight(&self) -> bool {
        self.tight_lower && self.tight_upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
    Neither,
}

impl Monotonicity {
    pub fn is_monotonic(self) -> bool {
        self != Monotonicity::Neither
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub breakpoints: Vec<f64>,
}

impl Partition {
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `C(n, k)` by the multiplicative recurrence, exact in integers up to
/// `n = 67` and rounded once to `f64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c as f64
}

fn basis(n: usize, j: usize, t: f64) -> f64 {
    binomial(n, j) * t.powi(j as i32) * (1.0 - t).powi((n - j) as i32)
}

pub fn bernstein_basis_eval(n: usize, j: usize, t: f64) -> Result<f64, BernsteinError> {
    if j > n {
        return Err(BernsteinError::IndexOutOfRange { index: j, degree: n });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(BernsteinError::ParameterOutOfRange(t));
    }
    Ok(basis(n, j, t))
}

/// Lower-triangular `B` with `beta = B alpha` at degree `n`.
pub fn monomial_to_bernstein_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n + 1, |j, k| if k <= j { binomial(j, k) / binomial(n, k) } else { 0.0 })
}

pub fn monomial_to_bernstein(p: &Polynomial) -> BernsteinForm {
    let n = p.degree();
    let coeffs = (0..=n)
        .map(|j| (0..=j).map(|k| p.coeffs[k] * binomial(j, k) / binomial(n, k)).sum())
        .collect();
    BernsteinForm { coeffs }
}

pub fn degree_elevate(b: &BernsteinForm, target: usize) -> Result<BernsteinForm, BernsteinError> {
    if target < b.degree() {
        return Err(BernsteinError::DegreeTooLow { from: b.degree(), to: target });
    }
    if target == b.degree() {
        return Ok(b.clone());
    }
    let mut coeffs = b.to_monomial().coeffs;
    coeffs.resize(target + 1, 0.0);
    Ok(monomial_to_bernstein(&Polynomial { coeffs }))
}

pub fn hull_bounds(b: &BernsteinForm) -> HullBounds {
    let c = &b.coeffs;
    let lower = c.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = TIGHT_TOL * scale;
    let (first, last) = (c[0], c[c.len() - 1]);
    HullBounds {
        lower,
        upper,
        tight_lower: first.min(last) - lower <= tol,
        tight_upper: upper - first.max(last) <= tol,
    }
}

/// `q(s) = p(a + h s)`.
pub fn rescale_to_unit(p: &Polynomial, a: f64, h: f64) -> Result<Polynomial, BernsteinError> {
    if !(h > 0.0) {
        return Err(BernsteinError::DegenerateInterval { a, b: a + h });
    }
    let n = p.degree();
    let coeffs = (0..=n)
        .map(|k| {
            let shifted: f64 = (k..=n).map(|i| p.coeffs[i] * binomial(i, k) * a.powi((i - k) as i32)).sum();
            shifted * h.powi(k as i32)
        })
        .collect();
    Ok(Polynomial { coeffs })
}

/// Real roots of `p` strictly inside `(a, b)`, ascending.
fn real_roots_inside(p: &Polynomial, a: f64, b: f64) -> Vec<f64> {
    let scale = p.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut deg = p.degree();
    while deg > 0 && p.coeffs[deg].abs() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = p.coeffs[deg];
    let mut companion = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -p.coeffs[i] / lead;
    }
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .filter(|&r| r > a && r < b)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

pub fn is_monotonic(p: &Polynomial, a: f64, b: f64) -> Result<Monotonicity, BernsteinError> {
    if !(a < b) {
        return Err(BernsteinError::DegenerateInterval { a, b });
    }
    let dp = p.derivative();
    let reach = a.abs().max(b.abs()).max(1.0);
    let scale = dp.coeffs.iter().enumerate().fold(0.0f64, |m, (k, c)| m.max(c.abs() * reach.powi(k as i32)));
    let zero = 1e-12 * scale.max(1.0);
    let mut cuts = vec![a];
    cuts.extend(real_roots_inside(&dp, a, b));
    cuts.push(b);
    let (mut up, mut down) = (false, false);
    for w in cuts.windows(2) {
        let v = dp.eval(0.5 * (w[0] + w[1]));
        if v > zero {
            up = true;
        } else if v < -zero {
            down = true;
        }
    }
    Ok(match (up, down) {
        (true, true) => Monotonicity::Neither,
        (false, true) => Monotonicity::NonIncreasing,
        _ => Monotonicity::NonDecreasing,
    })
}

/// Greedy left-to-right split of `[a, b]` into pieces on which the rescaled
/// polynomial has tight hull bounds on both sides.
pub fn tight_partition(p: &Polynomial, a: f64, b: f64, max_subdivisions: usize) -> Result<Partition, BernsteinError> {
    if !is_monotonic(p, a, b)?.is_monotonic() {
        return Err(BernsteinError::NotMonotonic { a, b });
    }
    let mut breakpoints = vec![a];
    let mut left = a;
    while left < b {
        if breakpoints.len() > max_subdivisions {
            return Err(BernsteinError::BudgetExceeded { budget: max_subdivisions });
        }
        let mut h = b - left;
        let mut halvings = 0;
        loop {
            let q = rescale_to_unit(p, left, h)?;
            if hull_bounds(&monomial_to_bernstein(&q)).is_tight() {
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(BernsteinError::BudgetExceeded { budget: max_subdivisions });
            }
            h *= 0.5;
        }
        let right = if halvings == 0 { b } else { left + h };
        breakpoints.push(right);
        left = right;
    }
    Ok(Partition { breakpoints })
}
