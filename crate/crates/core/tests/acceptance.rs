//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --release --test acceptance -- 4 7`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use layerwalk::limit::{
    compare_distributions, empirical_cf, rescaled_walk_sample, sample_delta, simulate_brownian_local_time,
    stable_draws, StableSpec,
};
use layerwalk::rng::{self, Purpose};
use layerwalk::stats::{
    count_returns, estimate_variance, fit_exponent, mean, mean_se, quantile_spread, replica_environment,
    sample_variance, sample_x_annealed, sd_curve,
};
use layerwalk::walk::{
    direct_returns, embedded_position_at, exact_distribution, sample_sojourn, simulate_embedded, FiniteEnv,
    LevelCache,
};
use layerwalk::{make_environment, OrientationScheme, Result, StayProbLaw};
use num_rational::BigRational;
use num_traits::{One, Zero};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn two_point() -> StayProbLaw {
    StayProbLaw::two_point(1.0 / 3.0, 2.0 / 3.0, 0.5).unwrap()
}

fn dyadic_horizons() -> Vec<u64> {
    (10..=16).map(|k| 1u64 << k).collect()
}

fn c1_constant_variance() -> Result<Outcome> {
    let law = StayProbLaw::constant(0.5)?;
    let curve = estimate_variance(&law, &OrientationScheme::Alternating, &[1000], 200_000, 101, false)?;
    let ratio = curve[0].value / 1000.0;
    outcome(
        (3.88..=4.12).contains(&ratio),
        format!("Var(X_2n)/n = {ratio:.4} (se {:.4}), want [3.88, 4.12]", curve[0].se / 1000.0),
    )
}

fn c2_random_p_exponent() -> Result<Outcome> {
    let curve = estimate_variance(&two_point(), &OrientationScheme::Alternating, &dyadic_horizons(), 50_000, 102, false)?;
    let fit = fit_exponent(&curve)?;
    outcome(
        (fit.slope - 1.5).abs() <= 0.07,
        format!("slope {:.4} (se {:.4}), want 1.50 +- 0.07", fit.slope, fit.slope_se),
    )
}

fn c3_delta_beta_two() -> Result<Outcome> {
    let hs = dyadic_horizons();
    let samples = sample_x_annealed(&two_point(), &OrientationScheme::IidRademacher, &hs, 20_000, 103)?;
    let fit = fit_exponent(&sd_curve(&hs, &samples)?)?;
    outcome(
        (fit.slope - 0.75).abs() <= 0.05,
        format!("sd slope {:.4} (se {:.4}), want 0.75 +- 0.05", fit.slope, fit.slope_se),
    )
}

fn c4_delta_beta_three_halves() -> Result<Outcome> {
    let law = StayProbLaw::stable_tail(1.5, 1.0)?;
    let curve = quantile_spread(&law, &OrientationScheme::IidRademacher, &dyadic_horizons(), 20_000, 104, 0.25)?;
    let fit = fit_exponent(&curve)?;
    outcome(
        (fit.slope - 5.0 / 6.0).abs() <= 0.05,
        format!("IQR slope {:.4} (se {:.4}), want 0.8333 +- 0.05", fit.slope, fit.slope_se),
    )
}

fn c5_transience_contrast() -> Result<Outcome> {
    let alt = OrientationScheme::Alternating;
    let replicas = 2000;
    // pilot on the transient law fixes the band before the main run
    let pilot = count_returns(&two_point(), &alt, &[1_000, 10_000, 100_000], replicas, 1051)?;
    let (g1, g2) = (pilot.growth(0, 1), pilot.growth(1, 2));
    let r = if g1 > 0.0 { (g2 / g1).min(1.0) } else { 1.0 };

    let main = [10_000, 100_000, 1_000_000];
    let recurrent = count_returns(&StayProbLaw::constant(0.5)?, &alt, &main, replicas, 1052)?;
    let transient = count_returns(&two_point(), &alt, &main, replicas, 1053)?;

    let rec_growth = recurrent.growth(0, 2);
    let rec_se = recurrent.combined_se(0, 2);
    let band = g2 * (1.0 + r) + 3.0 * transient.combined_se(0, 2);
    let tr_growth = transient.growth(0, 2);
    outcome(
        rec_growth >= 5.0 * rec_se && tr_growth <= band,
        format!(
            "constant: growth {rec_growth:.4} = {:.1} se (want >= 5); two_point: growth {tr_growth:.4} <= band {band:.4} (pilot g {g1:.4}, {g2:.4})",
            rec_growth / rec_se
        ),
    )
}

fn c6_c7_limit() -> Result<(Outcome, Outcome)> {
    let sample = rescaled_walk_sample(&two_point(), &OrientationScheme::IidRademacher, 1 << 14, 10_000, 106)?;
    let var_y = sample_variance(&sample.y);
    let c6 = Outcome {
        pass: (var_y - 1.0).abs() <= 0.05,
        detail: format!("gamma * Var(n^-1/2 M2) = {var_y:.4}, want 1 +- 5%"),
    };
    let delta = sample_delta(1.0, &StableSpec::<f64>::brownian(), 1e-4, 0.02, 5000, 107)?;
    let cmp = compare_distributions(&sample.x, &delta.values)?;
    let c7 = Outcome {
        pass: cmp.ks <= 0.05,
        detail: format!("KS(x / (gamma^-3/4 sigma_b), Delta_1) = {:.4}, want <= 0.05", cmp.ks),
    };
    Ok((c6, c7))
}

fn c8_oracle() -> Result<Outcome> {
    let n = 6;
    let replicas = 1_000_000;
    let env = make_environment(OrientationScheme::Alternating, StayProbLaw::constant(0.5)?, 108)?;
    let exact = exact_distribution(&FiniteEnv::alternating(n as i64 + 1, 0.5), n)?;
    let mut cache = LevelCache::new(&env);
    let (mut direct, mut embedded) = (BTreeMap::new(), BTreeMap::new());
    let mut rd = rng::stream(108, Purpose::Validate, 0);
    let mut re = rng::stream(108, Purpose::Validate, 1);
    for _ in 0..replicas {
        let (s, _) = direct_returns(&mut cache, &[n], &mut rd)?;
        *direct.entry((s.x, s.y)).or_insert(0u64) += 1;
        *embedded.entry(embedded_position_at(&mut cache, n, &mut re)?).or_insert(0u64) += 1;
    }
    let (tv_d, tv_e) = (exact.total_variation(&direct), exact.total_variation(&embedded));

    let half = BigRational::new(1.into(), 2.into());
    let two = exact_distribution(&FiniteEnv::alternating(3, half), 2)?;
    let eighth = BigRational::new(1.into(), 8.into());
    let quarter = BigRational::new(1.into(), 4.into());
    let spots = two.mass_at(0, 0) == eighth && two.mass_at(2, 0) == quarter;
    let total_is_one = two.total().is_one() && !two.mass_at(0, 0).is_zero();
    outcome(
        tv_d <= 0.01 && tv_e <= 0.01 && spots && total_is_one,
        format!(
            "TV direct {tv_d:.5}, embedded {tv_e:.5} (want <= 0.01); P(M2=(0,0)) = {}, P(M2=(2,0)) = {}",
            two.mass_at(0, 0),
            two.mass_at(2, 0)
        ),
    )
}

fn c9_components() -> Result<Outcome> {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut r = rng::stream(109, Purpose::Validate, 0);
    let xs: Vec<f64> = (0..1_000_000).map(|_| sample_sojourn(2.0 / 3.0, &mut r).map(|m| m as f64)).collect::<Result<_>>()?;
    let (m, m_se) = (mean(&xs), mean_se(&xs));
    let v = sample_variance(&xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
    let v_se = ((m4 - v * v) / xs.len() as f64).sqrt();
    let ok = (m - 2.0).abs() <= 3.0 * m_se && (v - 6.0).abs() <= 3.0 * v_se;
    pass &= ok;
    notes.push(format!("sojourn {m:.4}/{v:.3} {}", if ok { "ok" } else { "BAD" }));

    let mut worst_cf = 0.0f64;
    for (spec, idx) in [(StableSpec::symmetric(1.5, 1.0)?, 0), (StableSpec::brownian(), 1)] {
        let draws = stable_draws(&spec, 1_000_000, 109, idx)?;
        for theta in [0.25, 0.5, 1.0, 2.0] {
            let (re, im) = empirical_cf(&draws, theta);
            let (wr, wi): (f64, f64) = spec.characteristic_function(theta);
            worst_cf = worst_cf.max((re - wr).hypot(im - wi));
        }
    }
    pass &= worst_cf <= 0.01;
    notes.push(format!("cf err {worst_cf:.4}"));

    let mut r = rng::stream(109, Purpose::Validate, 2);
    let mut worst_occ = 0.0f64;
    for _ in 0..100 {
        let (_, lt) = simulate_brownian_local_time(1.0f64, 1e-4, 0.02, &mut r)?;
        worst_occ = worst_occ.max((lt.occupation_total() - 1.0).abs());
    }
    pass &= worst_occ <= 1e-12;
    notes.push(format!("occupation err {worst_occ:.1e}"));

    for (spec, seed) in [(StableSpec::brownian(), 1091), (StableSpec::symmetric(1.5, 1.0)?, 1093)] {
        let d1 = sample_delta(1.0, &spec, 1e-4, 0.02, 10_000, seed)?;
        let d2 = sample_delta(2.0, &spec, 2e-4, 0.02 * 2f64.sqrt(), 10_000, seed + 1)?;
        let scale = 2f64.powf(spec.delta_exponent());
        let scaled: Vec<f64> = d1.values.iter().map(|v| v * scale).collect();
        let ks = compare_distributions(&d2.values, &scaled)?.ks;
        pass &= ks <= 0.02;
        notes.push(format!("self-similarity KS(beta {}) {ks:.4}", spec.beta));
    }
    outcome(pass, notes.join("; "))
}

fn c10_telescoping() -> Result<Outcome> {
    let laws = [StayProbLaw::constant(0.5)?, two_point(), StayProbLaw::stable_tail(1.5, 1.0)?, StayProbLaw::beta(2.0, 3.0)?];
    let mut paths = 0u64;
    let mut violations = 0u64;
    for (l, law) in laws.iter().enumerate() {
        for i in 0..500 {
            let env = replica_environment(law, &OrientationScheme::Alternating, 110 + l as u64, i)?;
            let path = simulate_embedded(&env, 5000, &mut rng::replica_stream(110 + l as u64, i))?;
            let mut sum = 0i64;
            for (k, &s) in path.levels[..path.levels.len() - 1].iter().enumerate() {
                sum += env.level(s)?.epsilon.sign();
                if sum != ((k + 1) % 2) as i64 {
                    violations += 1;
                }
            }
            paths += 1;
        }
    }
    outcome(violations == 0, format!("{paths} paths x 5000 jumps, {violations} violations"))
}

type Task = Box<dyn Fn() -> Result<Vec<Outcome>>>;

fn single(f: fn() -> Result<Outcome>) -> impl Fn() -> Result<Vec<Outcome>> {
    move || f().map(|o| vec![o])
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |c: u32| wanted.is_empty() || wanted.contains(&c);

    // criteria 6 and 7 share one walk sample
    let limit = || c6_c7_limit().map(|(a, b)| vec![a, b]);
    let tasks: Vec<(Vec<u32>, Task)> = vec![
        (vec![1], Box::new(single(c1_constant_variance))),
        (vec![2], Box::new(single(c2_random_p_exponent))),
        (vec![3], Box::new(single(c3_delta_beta_two))),
        (vec![4], Box::new(single(c4_delta_beta_three_halves))),
        (vec![5], Box::new(single(c5_transience_contrast))),
        (vec![6, 7], Box::new(limit)),
        (vec![8], Box::new(single(c8_oracle))),
        (vec![9], Box::new(single(c9_components))),
        (vec![10], Box::new(single(c10_telescoping))),
    ];

    let (mut passed, mut total) = (0, 0);
    for (ids, task) in tasks {
        if !ids.iter().any(|&c| run(c)) {
            continue;
        }
        let t = Instant::now();
        let outcomes = task().unwrap_or_else(|e| {
            ids.iter()
                .map(|_| Outcome {
                    pass: false,
                    detail: format!("error: {e}"),
                })
                .collect()
        });
        let secs = t.elapsed().as_secs_f64();
        for (c, o) in ids.iter().zip(outcomes).filter(|(c, _)| run(**c)) {
            println!("criterion {c:>2}: {} {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            total += 1;
            passed += o.pass as usize;
        }
    }

    println!("acceptance: {passed}/{total} criteria passed");
    if passed == total {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
