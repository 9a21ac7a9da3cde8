use proptest::prelude::*;
use skewgbm::model::characteristic_roots;
use skewgbm::special_functions::ExcessivePair;
use skewgbm::{classify, solve, verify, GridConfig, PiecewiseValueFunction, SkewGbmParams};

fn params() -> impl Strategy<Value = SkewGbmParams> {
    (0.02f64..0.2, 0.1f64..0.6, -0.9f64..0.9, 0.2f64..8.0, -0.3f64..0.9)
        .prop_filter("beta away from 0", |t| t.2.abs() > 0.01)
        .prop_map(|(r, sigma, beta, z, frac)| SkewGbmParams::new(r, frac * r, sigma, 1.0, z, beta))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_solve_the_quadratic(r in 0.01f64..0.3, frac in -1.0f64..0.95, sigma in 0.05f64..1.0) {
        let b = frac * r;
        let (m, n) = characteristic_roots(r, b, sigma);
        prop_assert!(m < 0.0 && n > 1.0);
        for k in [m, n] {
            let q = 0.5 * sigma * sigma * k * k + (b - 0.5 * sigma * sigma) * k - r;
            prop_assert!(q.abs() <= 1e-12 * (r + (b * k).abs() + sigma * sigma * k * k));
        }
    }

    #[test]
    fn excessive_pair_is_monotone_and_positive(p in params(), t in 0.05f64..20.0, dt in 1.001f64..1.5) {
        let profile = classify(&p).unwrap();
        let pair = ExcessivePair::new(&profile, p.z);
        let (x, y) = (t, t * dt);
        let (px, py) = (pair.psi(x).unwrap(), pair.psi(y).unwrap());
        let (fx, fy) = (pair.phi(x).unwrap(), pair.phi(y).unwrap());
        prop_assert!(0.0 < px && px < py);
        prop_assert!(fx > fy && fy > 0.0);
    }

    #[test]
    fn value_dominates_payoff_and_increases(p in params()) {
        let vf = solve(&p).unwrap();
        let mut prev = 0.0;
        for i in 0..200 {
            let x = 1e-2 * 1.04f64.powi(i);
            let v = vf.evaluate(x).unwrap();
            prop_assert!(v >= (x - 1.0).max(0.0) - 1e-12, "x {x}: v {v}");
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn solved_value_verifies(p in params()) {
        let vf = solve(&p).unwrap();
        let rep = verify(&vf, &p, &GridConfig::default()).unwrap();
        prop_assert!(rep.pass, "{:?} in {}: {:?}", p, vf.regime, rep.failed());
    }

    #[test]
    fn json_round_trip_is_exact(p in params()) {
        let vf = solve(&p).unwrap();
        let back = PiecewiseValueFunction::from_json(&vf.to_json()).unwrap();
        prop_assert_eq!(back, vf);
    }
}
