use std::fmt;
use std::sync::Arc;

use flexcolloc_nlp::Dual;

use super::TranscriptionError;

/// Sentinel for an absent box bound.
pub const UNBOUNDED: f64 = 1e20;

/// `m(x(t0), x(tf))`.
pub type BoundaryCost = Arc<dyn Fn(&[Dual], &[Dual]) -> Dual + Send + Sync>;
/// `l(x, u, t)`.
pub type RunningCost = Arc<dyn Fn(&[Dual], &[Dual], Dual) -> Dual + Send + Sync>;
/// `b(x(t0), x(tf)) = 0`.
pub type BoundaryConditions = Arc<dyn Fn(&[Dual], &[Dual]) -> Vec<Dual> + Send + Sync>;
/// `r(xdot, x, u, t) = 0`.
pub type DynamicsResidual = Arc<dyn Fn(&[Dual], &[Dual], &[Dual], Dual) -> Vec<Dual> + Send + Sync>;
/// A vector-valued path function `g(x, u, t)`.
pub type PathFunction = Arc<dyn Fn(&[Dual], &[Dual], Dual) -> Vec<Dual> + Send + Sync>;

/// A fixed-horizon dynamic optimization problem.
#[derive(Clone)]
pub struct DopDefinition {
    pub name: String,
    pub n_x: usize,
    pub n_u: usize,
    pub n_b: usize,
    pub n_r: usize,
    pub t0: f64,
    pub tf: f64,
    pub boundary_cost: Option<BoundaryCost>,
    pub running_cost: RunningCost,
    pub boundary_conditions: BoundaryConditions,
    pub dynamics: DynamicsResidual,
    pub x_lower: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub u_lower: Vec<f64>,
    pub u_upper: Vec<f64>,
    /// Known initial state components, used only for the initial guess.
    pub x0_hint: Vec<Option<f64>>,
    /// Known final state components, used only for the initial guess.
    pub xf_hint: Vec<Option<f64>>,
}

impl fmt::Debug for DopDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DopDefinition")
            .field("name", &self.name)
            .field("n_x", &self.n_x)
            .field("n_u", &self.n_u)
            .field("n_b", &self.n_b)
            .field("n_r", &self.n_r)
            .field("horizon", &(self.t0, self.tf))
            .finish_non_exhaustive()
    }
}

impl DopDefinition {
    pub fn validate(&self) -> Result<(), TranscriptionError> {
        let dim = |what: &str, got: usize, want: usize| {
            if got != want {
                Err(TranscriptionError::Dimension(format!("{what} has length {got}, expected {want}")))
            } else {
                Ok(())
            }
        };
        dim("x_lower", self.x_lower.len(), self.n_x)?;
        dim("x_upper", self.x_upper.len(), self.n_x)?;
        dim("u_lower", self.u_lower.len(), self.n_u)?;
        dim("u_upper", self.u_upper.len(), self.n_u)?;
        dim("x0_hint", self.x0_hint.len(), self.n_x)?;
        dim("xf_hint", self.xf_hint.len(), self.n_x)?;
        if self.n_x == 0 {
            return Err(TranscriptionError::Dimension("problem has no states".into()));
        }
        if !(self.t0 < self.tf) {
            return Err(TranscriptionError::DegenerateInterval(self.t0, self.tf));
        }
        for (k, (l, u)) in self.x_lower.iter().zip(&self.x_upper).enumerate() {
            if !(l <= u) {
                return Err(TranscriptionError::Bounds(format!("state {k}: [{l}, {u}]")));
            }
        }
        for (k, (l, u)) in self.u_lower.iter().zip(&self.u_upper).enumerate() {
            if !(l <= u) {
                return Err(TranscriptionError::Bounds(format!("input {k}: [{l}, {u}]")));
            }
        }
        Ok(())
    }

    /// Running cost at plain values.
    pub fn running_cost_at(&self, x: &[f64], u: &[f64], t: f64) -> f64 {
        (self.running_cost)(&consts(x), &consts(u), Dual::constant(t)).re
    }

    pub fn boundary_cost_at(&self, x0: &[f64], xf: &[f64]) -> f64 {
        self.boundary_cost.as_ref().map_or(0.0, |m| m(&consts(x0), &consts(xf)).re)
    }

    pub fn dynamics_at(&self, xdot: &[f64], x: &[f64], u: &[f64], t: f64) -> Vec<f64> {
        (self.dynamics)(&consts(xdot), &consts(x), &consts(u), Dual::constant(t)).iter().map(|d| d.re).collect()
    }

    pub fn boundary_conditions_at(&self, x0: &[f64], xf: &[f64]) -> Vec<f64> {
        (self.boundary_conditions)(&consts(x0), &consts(xf)).iter().map(|d| d.re).collect()
    }
}

fn consts(v: &[f64]) -> Vec<Dual> {
    flexcolloc_nlp::dual::constants(v)
}

/// Rewrite `g_lower <= g(x, u, t) <= g_upper` as the algebraic equations
/// `g - s = 0` on new slack inputs `s` boxed by the same bounds.
pub fn reduce_path_constraint(
    dop: &DopDefinition,
    n_g: usize,
    g: PathFunction,
    g_lower: Vec<f64>,
    g_upper: Vec<f64>,
) -> Result<DopDefinition, TranscriptionError> {
    if g_lower.len() != n_g || g_upper.len() != n_g {
        return Err(TranscriptionError::Dimension(format!(
            "path bounds have lengths {} and {}, expected {n_g}",
            g_lower.len(),
            g_upper.len()
        )));
    }
    for (k, (l, u)) in g_lower.iter().zip(&g_upper).enumerate() {
        if !(l <= u) {
            return Err(TranscriptionError::Bounds(format!("path constraint {k}: [{l}, {u}]")));
        }
    }
    let n_u = dop.n_u;
    let inner_cost = dop.running_cost.clone();
    let inner_dyn = dop.dynamics.clone();
    let mut out = dop.clone();
    out.name = format!("{}+slack", dop.name);
    out.n_u = n_u + n_g;
    out.n_r = dop.n_r + n_g;
    out.running_cost = Arc::new(move |x, u, t| inner_cost(x, &u[..n_u], t));
    out.dynamics = Arc::new(move |xd, x, u, t| {
        let mut r = inner_dyn(xd, x, &u[..n_u], t);
        let gv = g(x, &u[..n_u], t);
        r.extend(gv.iter().zip(&u[n_u..]).map(|(gi, si)| *gi - *si));
        r
    });
    out.u_lower.extend(g_lower);
    out.u_upper.extend(g_upper);
    Ok(out)
}
