use flexcolloc_core::bernstein::{
    bernstein_basis_eval, hull_bounds, is_monotonic, monomial_to_bernstein, rescale_to_unit, tight_partition,
    Polynomial, DEFAULT_MAX_SUBDIVISIONS,
};
use proptest::prelude::*;
use proptest::test_runner::Config;

const GRID: usize = 10_000;

fn sampled_range(p: &Polynomial) -> (f64, f64) {
    (0..=GRID).map(|i| p.eval(i as f64 / GRID as f64)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn random_poly() -> impl Strategy<Value = Polynomial> {
    (0usize..=15)
        .prop_flat_map(|deg| proptest::collection::vec(-1.0f64..1.0, deg + 1))
        .prop_map(|c| Polynomial::new(c).unwrap())
}

fn integrate_square(r: &[f64]) -> Polynomial {
    let mut sq = vec![0.0; 2 * r.len() - 1];
    for (i, a) in r.iter().enumerate() {
        for (j, b) in r.iter().enumerate() {
            sq[i + j] += a * b;
        }
    }
    let mut c = vec![0.0];
    c.extend(sq.iter().enumerate().map(|(k, v)| v / (k + 1) as f64));
    Polynomial::new(c).unwrap()
}

proptest! {
    #![proptest_config(Config::with_cases(1000))]

    #[test]
    fn partition_of_unity(n in 0usize..=20, t in 0.0f64..=1.0) {
        let s: f64 = (0..=n).map(|j| bernstein_basis_eval(n, j, t).unwrap()).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bernstein_form_matches_horner(p in random_poly(), ts in proptest::collection::vec(0.0f64..=1.0, 1000)) {
        let b = monomial_to_bernstein(&p);
        prop_assert_eq!(b.coeffs()[0], p.coeffs()[0]);
        for t in ts {
            prop_assert!((b.eval(t) - p.eval(t)).abs() <= 1e-10);
        }
    }

    #[test]
    fn hull_contains_samples_and_tight_flags_are_sound(p in random_poly()) {
        let b = monomial_to_bernstein(&p);
        let h = hull_bounds(&b);
        let (lo, hi) = sampled_range(&p);
        prop_assert!(lo >= h.lower - 1e-10 && hi <= h.upper + 1e-10);
        let ends = [b.coeffs()[0], b.coeffs()[b.degree()]];
        if h.tight_lower {
            prop_assert!(lo >= h.lower - 1e-10);
            prop_assert!(ends.iter().any(|e| (e - h.lower).abs() <= 1e-12 * h.lower.abs().max(1.0)));
        }
        if h.tight_upper {
            prop_assert!(hi <= h.upper + 1e-10);
            prop_assert!(ends.iter().any(|e| (e - h.upper).abs() <= 1e-12 * h.upper.abs().max(1.0)));
        }
    }
}

proptest! {
    #![proptest_config(Config::with_cases(200))]

    #[test]
    fn tight_partition_terminates_on_monotonic_polynomials(
        r in (0usize..=7).prop_flat_map(|d| proptest::collection::vec(-1.0f64..1.0, d + 1)),
        negate in any::<bool>(),
    ) {
        let mut p = integrate_square(&r);
        if negate {
            p = Polynomial::new(p.coeffs().iter().map(|c| -c).collect()).unwrap();
        }
        prop_assert!(is_monotonic(&p, 0.0, 1.0).unwrap().is_monotonic());
        let part = tight_partition(&p, 0.0, 1.0, DEFAULT_MAX_SUBDIVISIONS).unwrap();
        prop_assert!(part.len() <= DEFAULT_MAX_SUBDIVISIONS);
        prop_assert_eq!(part.breakpoints[0], 0.0);
        prop_assert_eq!(*part.breakpoints.last().unwrap(), 1.0);
        for (a, b) in part.pieces() {
            let q = rescale_to_unit(&p, a, b - a).unwrap();
            let h = hull_bounds(&monomial_to_bernstein(&q));
            prop_assert!(h.is_tight());
            let (lo, hi) = sampled_range(&q);
            prop_assert!(lo >= h.lower - 1e-10 && hi <= h.upper + 1e-10);
        }
    }
}
