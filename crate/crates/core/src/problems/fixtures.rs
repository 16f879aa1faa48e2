use crate::bernstein::Polynomial;
use crate::quadrature::state_grid;

const CUBIC_DATA: [f64; 4] = [1.0, 0.4, -0.2, -1.0];
const OCTIC_DATA: [f64; 9] = [-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.8, 1.0];

/// Monotonic polynomials on `[-1, 1]` whose Bernstein hull is not tight:
/// Lagrange interpolants of fixed data on the degree-matched state grid
/// (LGR points plus the right endpoint).
pub fn appendix_a_polynomials() -> (Polynomial, Polynomial) {
    let build = |data: &[f64]| {
        let nodes = state_grid(data.len() - 1).expect("positive degree").points().to_vec();
        Polynomial::interpolate(&nodes, data).expect("distinct nodes")
    };
    (build(&CUBIC_DATA), build(&OCTIC_DATA))
}
