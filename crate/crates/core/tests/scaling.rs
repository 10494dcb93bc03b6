use layerwalk::rng;
use layerwalk::stats::{
    count_returns, decompose, estimate_variance, fit_exponent, local_time_profile, quantile_spread,
    replica_environment,
};
use layerwalk::walk::simulate_embedded;
use layerwalk::{theoretical_constants, OrientationScheme, StayProbLaw};

#[test]
fn constant_laws_have_linear_variance_for_any_p() {
    for p in [0.2, 0.5, 0.8] {
        let law = StayProbLaw::constant(p).unwrap();
        let curve = estimate_variance(&law, &OrientationScheme::Alternating, &[64, 128, 256, 512, 1024], 4000, 1, false).unwrap();
        let fit = fit_exponent(&curve).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "p {p}: {}", fit.slope);
        // Var(X_2n) = 2 E[p/(1-p)^2] n exactly
        let c = 2.0 * p / ((1.0 - p) * (1.0 - p));
        for pt in &curve {
            let ratio = pt.value / (c * pt.n as f64);
            assert!((ratio - 1.0).abs() < 3.0 * pt.se / (c * pt.n as f64) + 0.01, "p {p} n {}: {ratio}", pt.n);
        }
    }
}

#[test]
fn decomposition_identity_holds_on_every_path() {
    for (scheme, law) in [
        (OrientationScheme::Alternating, StayProbLaw::two_point(1.0 / 3.0, 2.0 / 3.0, 0.5).unwrap()),
        (OrientationScheme::IidRademacher, StayProbLaw::beta(3.0, 4.0).unwrap()),
        (OrientationScheme::IidRademacher, StayProbLaw::stable_tail(1.5, 1.0).unwrap()),
    ] {
        for i in 0..50 {
            let env = replica_environment(&law, &scheme, 2, i).unwrap();
            let path = simulate_embedded(&env, 3000, &mut rng::replica_stream(2, i)).unwrap();
            for m in [0, 1, 17, 1000, 3000] {
                let d = decompose(&path, &env, m).unwrap();
                let scale = (d.x.unsigned_abs() as f64).max(1.0);
                assert!(d.residual().abs() <= 1e-9 * scale, "{}", d.residual());
                let lt = local_time_profile(&path.levels, m).unwrap();
                assert_eq!(lt.total(), m);
            }
        }
    }
}

#[test]
fn spread_of_a_finite_variance_law_scales_like_its_sd() {
    let law = StayProbLaw::two_point(1.0 / 3.0, 2.0 / 3.0, 0.5).unwrap();
    let curve = quantile_spread(&law, &OrientationScheme::IidRademacher, &[256, 1024, 4096], 3000, 3, 0.25).unwrap();
    let fit = fit_exponent(&curve).unwrap();
    assert!((fit.slope - 0.75).abs() < 0.08, "{}", fit.slope);
}

#[test]
fn returns_grow_monotonically_and_start_at_zero() {
    let law = StayProbLaw::two_point(1.0 / 3.0, 2.0 / 3.0, 0.5).unwrap();
    let stats = count_returns(&law, &OrientationScheme::Alternating, &[0, 10, 100, 1000], 300, 4).unwrap();
    assert_eq!(stats.mean_returns[0], 0.0);
    assert!(stats.mean_returns.windows(2).all(|w| w[0] <= w[1]));
    assert!(stats.std_error.iter().all(|&s| s >= 0.0));
}

#[test]
fn vertical_time_change_constant() {
    let law = StayProbLaw::two_point(1.0 / 3.0, 2.0 / 3.0, 0.5).unwrap();
    let c = theoretical_constants(&law).unwrap();
    assert!((c.gamma - 9.0 / 4.0).abs() < 1e-12);
    assert!((c.delta - 0.75).abs() < 1e-12);
}
