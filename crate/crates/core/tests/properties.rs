use proptest::prelude::*;
use repo_convexity::{
    compute_adjustments, convexity_adjustment, maturity_adjustment, strip_bond_curve_from_spot_repos, DiscountCurve,
    Maturity, ModelParams, RepoCurveView, RepoQuote, RepoSchedule,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

prop_compose! {
    fn curve_pillars()(gaps in prop::collection::vec(0.05f64..3.0, 1..25),
                       rates in prop::collection::vec(-0.01f64..0.08, 25)) -> Vec<(f64, f64)> {
        let mut t = 0.0;
        let mut log_df = 0.0;
        gaps.iter().zip(&rates).map(|(gap, r)| {
            t += gap;
            log_df -= r * gap;
            (t, log_df.exp())
        }).collect()
    }
}

prop_compose! {
    fn params()(sigma in 0.0f64..0.03, epsilon in 0.0f64..0.02,
                theta in prop_oneof![Just(0.0), Just(1e-9), 1e-6f64..2.0],
                kappa in prop_oneof![Just(0.0), Just(1e-9), 1e-6f64..2.0],
                rho in -1.0f64..=1.0) -> ModelParams {
        ModelParams::new(sigma, epsilon, theta, kappa, rho).unwrap()
    }
}

prop_compose! {
    fn schedule()(t in 0.0f64..3.0, fwd in prop_oneof![Just(0.0), 0.0f64..10.0],
                  period in 0.01f64..3.0, residual in prop_oneof![Just(0.0), 0.0f64..40.0]) -> RepoSchedule {
        let s = t + fwd;
        let e = s + period;
        RepoSchedule::new(t, s, e, e + residual, period).unwrap()
    }
}

proptest! {
    #[test]
    fn pillars_are_reproduced_exactly(pillars in curve_pillars()) {
        let curve = DiscountCurve::new(0.0, &pillars).unwrap();
        for &(t, df) in &pillars {
            prop_assert_eq!(curve.discount_factor(t).unwrap(), df);
        }
        prop_assert_eq!(curve.discount_factor(0.0).unwrap(), 1.0);
    }

    #[test]
    fn forwards_integrate_to_discount_factors(pillars in curve_pillars(), u in 0.0f64..1.0) {
        let curve = DiscountCurve::new(0.0, &pillars).unwrap();
        let mut prev = 0.0;
        for &(t, _) in &pillars {
            let x = prev + u * (t - prev);
            let f = curve.instantaneous_forward(x.min(t - 1e-12 * t.max(1.0))).unwrap();
            let drop = curve.log_discount_factor(prev).unwrap() - curve.log_discount_factor(t).unwrap();
            prop_assert!((f * (t - prev) - drop).abs() <= 1e-12 * drop.abs().max(1e-3));
            prev = t;
        }
    }

    #[test]
    fn log_linear_between_pillars(pillars in curve_pillars(), u in 0.0f64..=1.0) {
        let curve = DiscountCurve::new(0.0, &pillars).unwrap();
        let (a, da) = pillars[0];
        let x = u * a;
        let want = (u * da.ln()).exp();
        prop_assert!(rel(curve.discount_factor(x).unwrap(), want) < 1e-14);
    }

    #[test]
    fn strip_round_trips_spot_repo_rates(pillars in curve_pillars(), p in params()) {
        let curve = DiscountCurve::new(0.0, &pillars).unwrap();
        let view = RepoCurveView::new(curve.clone(), p).unwrap();
        let quotes: Vec<RepoQuote> = pillars
            .iter()
            .rev()
            .map(|&(t, _)| {
                let rate = view.repo_rate(&RepoSchedule::new(0.0, 0.0, t, t, t).unwrap()).unwrap();
                RepoQuote::new(0.0, t, rate, t).unwrap()
            })
            .collect();
        let stripped = strip_bond_curve_from_spot_repos(0.0, &quotes).unwrap();
        for &(t, df) in &pillars {
            prop_assert!(rel(stripped.discount_factor(t).unwrap(), df) < 1e-12);
        }
    }

    #[test]
    fn adjustments_decompose(p in params(), s in schedule()) {
        let adj = compute_adjustments(&p, &s, 0.0, 0.0).unwrap();
        prop_assert!(adj.decomposition_residual() < 1e-14);
        prop_assert_eq!(adj.total, convexity_adjustment(&p, &s));
    }

    #[test]
    fn convexity_is_linear_in_correlation(p in params(), s in schedule(), rho in -1.0f64..=1.0) {
        let unit = convexity_adjustment(&p.with_rho(1.0), &s);
        let c = convexity_adjustment(&p.with_rho(rho), &s);
        prop_assert!((c - rho * unit).abs() <= 1e-15 * unit.abs().max(1e-300) + 1e-300);
    }

    #[test]
    fn boundaries_are_exact(p in params(), s in schedule()) {
        let spot_to_maturity = RepoSchedule::new(s.fix, s.fix, s.end, s.end, s.end - s.fix).unwrap();
        prop_assert_eq!(convexity_adjustment(&p, &spot_to_maturity), 0.0);
        prop_assert_eq!(maturity_adjustment(&p, s.fix, s.end, Maturity::Finite(s.end)).unwrap(), 0.0);
    }

    #[test]
    fn maturity_adjustment_sign_follows_correlation(p in params(), s in schedule()) {
        prop_assume!(s.bond_maturity > s.end && s.end > s.fix);
        let m = maturity_adjustment(&p, s.fix, s.end, Maturity::Finite(s.bond_maturity)).unwrap();
        let scale = p.covariance_scale();
        prop_assert!(m * scale >= 0.0);
        if scale != 0.0 {
            prop_assert!(m != 0.0);
        }
    }
}
