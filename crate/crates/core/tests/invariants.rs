use biconservative::curvature::{
    admissible_interval, prime_constant, prime_polynomial, solve_curvature,
};
use biconservative::io::CsvTable;
use biconservative::pipeline::ConfigLayer;
use biconservative::profile::RevolutionProfile;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = i32> {
    prop_oneof![Just(-1), Just(0), Just(1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prime_polynomial_is_the_squared_derivative(k in 0.05f64..3.0, kp in -3.0f64..3.0, c in model()) {
        let constant = prime_constant(k, kp, c).unwrap();
        let p = prime_polynomial(k, constant, c);
        prop_assert!((p - kp * kp).abs() <= 1e-11 * (1.0 + kp * kp + constant.abs() * k.powf(3.5)));
    }

    #[test]
    fn initial_curvature_is_admissible(k in 0.05f64..3.0, kp in -3.0f64..3.0, c in model()) {
        let constant = prime_constant(k, kp, c).unwrap();
        let (lo, hi) = admissible_interval(constant, c).unwrap();
        let slack = 1e-9 * k;
        prop_assert!(lo - slack <= k && k <= hi + slack, "{k} outside [{lo}, {hi}]");
    }

    #[test]
    fn prime_constant_is_conserved(k in 0.2f64..2.0, kp in -2.0f64..2.0, c in model()) {
        let sol = solve_curvature(c, k, kp, (-0.5, 0.5), 1e-10).unwrap();
        prop_assert!(sol.max_drift() <= sol.drift_bound(), "{} > {}", sol.max_drift(), sol.drift_bound());
        let admissible = sol.admissible_interval();
        for s in sol.samples() {
            prop_assert!(s.k > 0.0);
            prop_assert!(s.k <= admissible.1 * (1.0 + 1e-8));
        }
    }

    #[test]
    fn revolution_profile_inverts(constant in 0.5f64..3.0, t in 0.0f64..1.0) {
        let p = RevolutionProfile::new(constant, 10.0).unwrap();
        let (lo, hi) = p.domain();
        let rho = lo + (hi - lo) * (0.01 + 0.98 * t);
        let u = p.u(rho).unwrap();
        let back = p.rho(u).unwrap();
        prop_assert!((back - rho).abs() <= 1e-10 * rho, "{rho} -> {u} -> {back}");
        prop_assert!(p.u_prime(rho).unwrap() > 0.0);
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 3), 0..20)) {
        let mut t = CsvTable::new(&["a", "b", "c"]).meta("note", "x = y");
        for r in &rows {
            t.push(r.clone());
        }
        let back = CsvTable::parse(&t.to_csv_string()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn overlay_prefers_the_top_layer(a in prop::option::of(0.1f64..5.0), b in prop::option::of(0.1f64..5.0), n in prop::option::of(2usize..100)) {
        let bottom = ConfigLayer { k0: a, nu: Some(7), ..ConfigLayer::default() };
        let top = ConfigLayer { k0: b, nu: n, ..ConfigLayer::default() };
        let merged = bottom.overlay(top);
        prop_assert_eq!(merged.k0, b.or(a));
        prop_assert_eq!(merged.nu, Some(n.unwrap_or(7)));
    }
}
