use approx::assert_abs_diff_eq;
use flexcolloc_core::bernstein::{hull_bounds, is_monotonic, monomial_to_bernstein, rescale_to_unit, tight_partition};
use flexcolloc_core::problems::{
    appendix_a_polynomials, bryson_denham, bryson_denham_analytic_cost, bryson_denham_fine_reference, cart_pole,
    sine_approximation, SineMesh, BRYSON_DENHAM_BOUND,
};
use flexcolloc_core::transcription::DopDefinition;
use flexcolloc_nlp::{dual::constants, solve, Dual, SolveStatus, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Roots of `p'` on `[-1, 1]` by dense sign scan plus bisection.
fn derivative_changes_sign(p: &flexcolloc_core::bernstein::Polynomial) -> bool {
    let d = p.derivative();
    let m = 20_000;
    let vals: Vec<f64> = (0..=m).map(|q| d.eval(-1.0 + 2.0 * q as f64 / m as f64)).collect();
    let pos = vals.iter().any(|&v| v > 1e-12);
    let neg = vals.iter().any(|&v| v < -1e-12);
    pos && neg
}

#[test]
fn fixtures_are_monotonic_but_not_tight() {
    let (p3, p8) = appendix_a_polynomials();
    for p in [&p3, &p8] {
        assert!(!derivative_changes_sign(p));
        assert!(is_monotonic(p, -1.0, 1.0).unwrap().is_monotonic());
        let unit = rescale_to_unit(p, -1.0, 2.0).unwrap();
        let hull = hull_bounds(&monomial_to_bernstein(&unit));
        assert!(!hull.is_tight());
        let parts = tight_partition(p, -1.0, 1.0, 64).unwrap();
        assert!(parts.len() > 1 && parts.len() <= 64);
    }
}

fn unit_range(n: usize, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
    let clamp = |v: f64| v.clamp(-10.0, 10.0);
    let (lo, hi) = (clamp(lo), clamp(hi));
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

fn callbacks_are_smooth(dop: &DopDefinition) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..dop.n_x).flat_map(|k| unit_range(1, &mut rng, dop.x_lower[k], dop.x_upper[k])).collect();
        let u: Vec<f64> = (0..dop.n_u).flat_map(|k| unit_range(1, &mut rng, dop.u_lower[k], dop.u_upper[k])).collect();
        let xd = unit_range(dop.n_x, &mut rng, -10.0, 10.0);
        let t = rng.gen_range(dop.t0..=dop.tf);
        let xf = unit_range(dop.n_x, &mut rng, -10.0, 10.0);
        // seed a random direction through every argument
        let seed = |v: &[f64], rng: &mut ChaCha8Rng| -> Vec<Dual> {
            v.iter().map(|&re| Dual { re, eps: rng.gen_range(-1.0..1.0) }).collect()
        };
        let (dx, du, dxd, dxf) = (seed(&x, &mut rng), seed(&u, &mut rng), seed(&xd, &mut rng), seed(&xf, &mut rng));
        let dt = Dual { re: t, eps: 1.0 };
        assert!((dop.running_cost)(&dx, &du, dt).is_finite());
        assert!((dop.dynamics)(&dxd, &dx, &du, dt).iter().all(|d| d.is_finite()));
        assert!((dop.boundary_conditions)(&dx, &dxf).iter().all(|d| d.is_finite()));
        assert_eq!((dop.dynamics)(&dxd, &dx, &du, dt).len(), dop.n_r);
        assert_eq!((dop.boundary_conditions)(&dx, &dxf).len(), dop.n_b);
        if let Some(m) = &dop.boundary_cost {
            assert!(m(&dx, &dxf).is_finite());
        }
    }
}

#[test]
fn problem_callbacks_are_finite_on_their_boxes() {
    callbacks_are_smooth(&bryson_denham());
    callbacks_are_smooth(&cart_pole());
}

#[test]
fn bryson_denham_box() {
    let dop = bryson_denham();
    assert_eq!(dop.x_upper[0], BRYSON_DENHAM_BOUND);
    assert!(dop.x_lower.iter().chain(&dop.u_lower).all(|&l| l <= -1e19));
    assert!(dop.u_upper.iter().chain(&dop.x_upper[1..]).all(|&u| u >= 1e19));
    let r = (dop.dynamics)(&constants(&[1.0, 0.0]), &constants(&[0.0, 1.0]), &constants(&[0.0]), Dual::constant(0.0));
    assert_eq!(r.iter().map(|d| d.re).collect::<Vec<_>>(), vec![0.0, 0.0]);
}

#[test]
fn cart_pole_box_and_dimensions() {
    let dop = cart_pole();
    assert_eq!((dop.x_lower[0], dop.x_upper[0]), (0.0, 1.0));
    assert_eq!(dop.n_r, 4);
    assert!(dop.x_lower[1..].iter().all(|&l| l <= -1e19));
}

/// The fit errors are tiny, so stationarity must be resolved far below the
/// default tolerance.
fn tight() -> SolverOptions {
    SolverOptions { tol: 1e-14, ..SolverOptions::default() }
}

fn solved_sine(n_p: usize, mesh: SineMesh, constrained: bool) -> (flexcolloc_core::problems::SineApproximation, Vec<f64>) {
    let s = sine_approximation(n_p, mesh, constrained).unwrap();
    let sol = solve(&s.nlp, &tight()).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged, "n_p = {n_p}, {mesh:?}, constrained = {constrained}");
    (s, sol.z)
}

#[test]
fn unconstrained_sine_fit_converges_spectrally() {
    let (s, z) = solved_sine(14, SineMesh::Equispaced, false);
    assert!(s.l2_error(&z).unwrap() < 1e-6);
}

#[test]
fn flexing_relieves_the_bernstein_bound_on_the_sine() {
    let (eq, z_eq) = solved_sine(10, SineMesh::Equispaced, true);
    let (fx, z_fx) = solved_sine(10, SineMesh::Flexible, true);
    // unconstrained baseline on the partition the constrained fit flexed to
    let bp = fx.breakpoints(&z_fx);
    let mut fu = sine_approximation(10, SineMesh::Flexible, false).unwrap();
    fu.pin_breakpoints([bp[1], bp[2]]).unwrap();
    let z_fu = solve(&fu.nlp, &tight()).unwrap().z;
    let (e_eq, e_fx, e_fu) = (eq.l2_error(&z_eq).unwrap(), fx.l2_error(&z_fx).unwrap(), fu.l2_error(&z_fu).unwrap());
    assert!(e_eq >= 10.0 * e_fx, "equispaced {e_eq:e}, flexed {e_fx:e}");
    assert!(e_fx <= 10.0 * e_fu, "flexed {e_fx:e}, unconstrained {e_fu:e}");
    // the bound holds on the constrained fits
    assert!(eq.max_abs(&z_eq, 10_000) <= 1.0 + 1e-9);
    assert!(fx.max_abs(&z_fx, 10_000) <= 1.0 + 1e-9);
    // breakpoints move toward the extrema of the sine
    assert!((bp[1] - 0.25).abs() < (1.0 / 3.0 - 0.25));
    assert!((bp[2] - 0.75).abs() < (0.75 - 2.0 / 3.0));
}

#[test]
fn pinning_fixes_the_breakpoints() {
    let mut s = sine_approximation(6, SineMesh::Flexible, false).unwrap();
    s.pin_breakpoints([0.3, 0.7]).unwrap();
    let z = solve(&s.nlp, &tight()).unwrap().z;
    assert_eq!(s.breakpoints(&z), vec![0.0, 0.3, 0.7, 1.0]);
    assert!(s.pin_breakpoints([0.01, 0.7]).is_err());
    assert!(sine_approximation(6, SineMesh::Equispaced, false).unwrap().pin_breakpoints([0.3, 0.7]).is_err());
}

#[test]
fn sine_problem_shape() {
    let s = sine_approximation(4, SineMesh::Flexible, true).unwrap();
    assert_eq!(s.nlp.dimension, 3 * 5 + 2);
    assert_eq!(s.nlp.linear.len(), 3 * 5 + 3);
    let e = sine_approximation(4, SineMesh::Equispaced, false).unwrap();
    assert_eq!(e.nlp.dimension, 15);
    assert!(e.nlp.linear.is_empty());
    assert!(sine_approximation(0, SineMesh::Flexible, true).is_err());
}

#[test]
fn analytic_reference_cost() {
    assert_abs_diff_eq!(bryson_denham_analytic_cost(BRYSON_DENHAM_BOUND), 2.24, epsilon = 1e-12);
}

// The dense solver needs tens of minutes for these sizes.
#[test]
#[ignore]
fn fine_reference_is_stable_under_refinement() {
    let opts = SolverOptions { max_iter: 20_000, ..SolverOptions::default() };
    let coarse = bryson_denham_fine_reference(12, 16, &opts).unwrap();
    let fine = bryson_denham_fine_reference(14, 24, &opts).unwrap();
    assert!((coarse.objective - fine.objective).abs() <= 1e-6 * fine.objective);
    assert!((fine.objective - bryson_denham_analytic_cost(BRYSON_DENHAM_BOUND)).abs() <= 1e-4);
}
