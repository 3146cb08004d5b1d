use macexp_core::correlated::{es_corr, es_corr_single_active};
use macexp_core::gallager::{e0, es, es_class, es_tau, PointToPointChannel};
use macexp_core::oracle::{tilted_max, tilted_objective};
use macexp_core::{Class, ClassPair, ErrorType, JointSource, SolverConfig, Thresholds, User};
use proptest::prelude::*;

fn dist(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn source() -> impl Strategy<Value = JointSource> {
    (2usize..=3, 2usize..=3)
        .prop_flat_map(|(n1, n2)| (Just(n2), dist(n1 * n2..=n1 * n2)))
        .prop_map(|(n2, flat)| JointSource::new(&flat.chunks(n2).map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap())
}

fn channel() -> impl Strategy<Value = (Vec<f64>, PointToPointChannel)> {
    (2usize..=4, 2usize..=4).prop_flat_map(|(nx, ny)| {
        (dist(nx..=nx), prop::collection::vec(dist(ny..=ny), nx))
            .prop_map(|(q, rows)| (q, PointToPointChannel::from_rows(&rows).unwrap()))
    })
}

fn error_type() -> impl Strategy<Value = ErrorType> {
    prop::sample::select(ErrorType::ALL.to_vec())
}

fn class_pair() -> impl Strategy<Value = ClassPair> {
    prop::sample::select(ClassPair::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn es_is_convex_nondecreasing_and_zero_at_zero(p in dist(2..=6)) {
        let v: Vec<f64> = (0..=60).map(|k| es(k as f64 / 20.0, &p)).collect();
        prop_assert!(v[0].abs() < 1e-12);
        for w in v.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn e0_is_concave_and_zero_at_zero((q, ch) in channel()) {
        let v: Vec<f64> = (0..=50).map(|k| e0(k as f64 / 50.0, &q, &ch)).collect();
        prop_assert!(v[0].abs() < 1e-12);
        for w in v.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-9);
        }
    }

    #[test]
    fn es_corr_is_monotone_in_each_threshold(
        src in source(), rho in 0.0f64..1.0, tau in error_type(), classes in class_pair(),
        base in (0.0f64..1.0, 0.0f64..1.0), a in 0.0f64..1.0, b in 0.0f64..1.0, second in any::<bool>(),
    ) {
        let cfg = SolverConfig::default();
        let user = if second { User::Two } else { User::One };
        let base = Thresholds::new(base.0, base.1).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let v_lo = es_corr(rho, &src, base.with(user, lo), tau, classes, &cfg).value;
        let v_hi = es_corr(rho, &src, base.with(user, hi), tau, classes, &cfg).value;
        let (small, large) = match classes.of(user) {
            Class::One => (v_hi, v_lo),
            Class::Two => (v_lo, v_hi),
        };
        prop_assert!(small == large || small <= large + 1e-9, "{small} > {large}");
    }

    #[test]
    fn es_corr_never_exceeds_es_tau(src in source(), rho in 0.0f64..1.0, tau in error_type(), classes in class_pair(), g in (0.0f64..1.0, 0.0f64..1.0)) {
        let cfg = SolverConfig::default();
        let v = es_corr(rho, &src, Thresholds::new(g.0, g.1).unwrap(), tau, classes, &cfg).value;
        prop_assert!(v <= es_tau(rho, &src, tau) + 1e-12);
    }

    #[test]
    fn product_sources_factorize(
        a in dist(2..=4), b in dist(2..=4), rho in 0.0f64..1.0, classes in class_pair(), g in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let cfg = SolverConfig::default();
        let src = JointSource::product(&a, &b).unwrap();
        let gamma = Thresholds::new(g.0, g.1).unwrap();
        let ca = |r: f64| es_class(r, &a, gamma.gamma1, classes.user1, &cfg).value;
        let cb = |r: f64| es_class(r, &b, gamma.gamma2, classes.user2, &cfg).value;
        let expected = [ca(rho) + cb(0.0), ca(0.0) + cb(rho), ca(rho) + cb(rho)];
        for tau in ErrorType::ALL {
            let got = es_corr(rho, &src, gamma, tau, classes, &cfg).value;
            let want = expected[tau.index()];
            prop_assert!(got == want || (got - want).abs() < 1e-8, "{tau:?}: {got} vs {want}");
        }
    }

    #[test]
    fn one_active_constraint_matches_full_dual(
        src in source(), rho in 0.0f64..1.0, tau in error_type(), classes in class_pair(), g in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let cfg = SolverConfig::default();
        let gamma = Thresholds::new(g.0, g.1).unwrap();
        let full = es_corr(rho, &src, gamma, tau, classes, &cfg);
        if let Some(lam) = full.lambda {
            for user in User::BOTH {
                if lam[user.other().index()] == 0.0 {
                    let single = es_corr_single_active(rho, &src, gamma.of(user), user, classes.of(user), tau, &cfg);
                    prop_assert!((single.value - full.value).abs() < 1e-8, "{} vs {}", single.value, full.value);
                }
            }
        }
    }

    #[test]
    fn tilted_maximizer_dominates(e in prop::collection::vec(0.0f64..3.0, 2..=6), rho in 0.0f64..1.0, seeds in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 50)) {
        prop_assume!(e.iter().any(|&x| x > 0.0));
        let (value, v_star) = tilted_max(&e, rho).unwrap();
        prop_assert!((tilted_objective(&e, &v_star, rho) - value).abs() < 1e-12 * (1.0 + value));
        for raw in seeds {
            let raw = &raw[..e.len()];
            let s: f64 = raw.iter().sum();
            if s <= 0.0 { continue; }
            let v: Vec<f64> = raw.iter().map(|x| x / s).collect();
            prop_assert!(tilted_objective(&e, &v, rho) <= value + 1e-12);
        }
    }
}
