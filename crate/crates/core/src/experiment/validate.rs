//! Fast self-checks of the simulators against exact or closed-form answers.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::Serialize;

use crate::env::{make_environment, OrientationScheme, StayProbLaw};
use crate::error::Result;
use crate::limit::{empirical_cf, simulate_brownian_local_time, stable_draws, StableSpec};
use crate::rng::{self, Purpose};
use crate::stats::{mean, mean_se, sample_variance};
use crate::walk::{self, exact_distribution, FiniteEnv, LevelCache};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, value: f64, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            value,
            detail,
        }
    }
}

pub type SojournSampler = fn(f64, &mut dyn RngCore) -> u64;

fn library_sojourn(p: f64, rng: &mut dyn RngCore) -> u64 {
    walk::sample_sojourn(p, rng).expect("p in (0,1)")
}

/// Replaceable pieces, so a broken component can be shown to fail its check.
#[derive(Debug, Clone, Copy)]
pub struct ValidationHooks {
    pub sojourn: SojournSampler,
}

impl Default for ValidationHooks {
    fn default() -> Self {
        ValidationHooks {
            sojourn: library_sojourn,
        }
    }
}

pub const ORACLE_HORIZON: u64 = 6;
pub const ORACLE_REPLICAS: u64 = 1_000_000;
pub const SOJOURN_DRAWS: u64 = 1_000_000;
pub const CF_DRAWS: usize = 1_000_000;

pub fn validate_suite(seed: u64) -> Result<Vec<CheckResult>> {
    validate_suite_with(seed, &ValidationHooks::default())
}

pub fn validate_suite_with(seed: u64, hooks: &ValidationHooks) -> Result<Vec<CheckResult>> {
    let mut out = oracle_checks(seed)?;
    out.extend(sojourn_checks(seed, hooks.sojourn));
    out.push(occupation_check(seed)?);
    out.push(gaussian_cf_check(seed)?);
    Ok(out)
}

fn oracle_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let law = StayProbLaw::constant(0.5)?;
    let env = make_environment(OrientationScheme::Alternating, law, seed)?;
    let exact = exact_distribution(&FiniteEnv::alternating(ORACLE_HORIZON as i64 + 1, 0.5), ORACLE_HORIZON)?;
    let two = exact_distribution(&FiniteEnv::alternating(3, 0.5f64), 2)?;

    let mut direct = BTreeMap::new();
    let mut embedded = BTreeMap::new();
    let mut cache = LevelCache::new(&env);
    let mut rd = rng::stream(seed, Purpose::Validate, 0);
    let mut re = rng::stream(seed, Purpose::Validate, 1);
    for _ in 0..ORACLE_REPLICAS {
        let (end, _) = walk::direct_returns(&mut cache, &[ORACLE_HORIZON], &mut rd)?;
        *direct.entry((end.x, end.y)).or_insert(0u64) += 1;
        let pos = walk::embedded_position_at(&mut cache, ORACLE_HORIZON, &mut re)?;
        *embedded.entry(pos).or_insert(0u64) += 1;
    }
    let tv_direct = exact.total_variation(&direct);
    let tv_embedded = exact.total_variation(&embedded);
    let spot = (two.mass_at(0, 0), two.mass_at(2, 0));
    Ok(vec![
        CheckResult::new(
            "oracle_direct",
            tv_direct <= 0.01,
            tv_direct,
            format!("total variation at n = {ORACLE_HORIZON}, limit 0.01"),
        ),
        CheckResult::new(
            "oracle_embedded",
            tv_embedded <= 0.01,
            tv_embedded,
            format!("total variation at n = {ORACLE_HORIZON}, limit 0.01"),
        ),
        CheckResult::new(
            "oracle_spot_masses",
            (spot.0 - 0.125).abs() < 1e-15 && (spot.1 - 0.25).abs() < 1e-15,
            spot.0,
            format!("P(M_2 = (0,0)) = {}, P(M_2 = (2,0)) = {}", spot.0, spot.1),
        ),
    ])
}

fn sojourn_checks(seed: u64, sampler: SojournSampler) -> Vec<CheckResult> {
    let p = 2.0 / 3.0;
    let mut r = rng::stream(seed, Purpose::Validate, 2);
    let xs: Vec<f64> = (0..SOJOURN_DRAWS).map(|_| sampler(p, &mut r) as f64).collect();
    let m = mean(&xs);
    let m_se = mean_se(&xs);
    let v = sample_variance(&xs);
    // se of the sample variance from the fourth central moment
    let m4 = mean(&xs.iter().map(|x| (x - m).powi(4)).collect::<Vec<_>>());
    let v_se = ((m4 - v * v) / xs.len() as f64).sqrt();
    vec![
        CheckResult::new(
            "sojourn_mean",
            (m - 2.0).abs() <= 3.0 * m_se,
            m,
            format!("p = 2/3: want 2 within 3 se ({m_se:.4})"),
        ),
        CheckResult::new(
            "sojourn_variance",
            (v - 6.0).abs() <= 3.0 * v_se,
            v,
            format!("p = 2/3: want 6 within 3 se ({v_se:.4})"),
        ),
    ]
}

fn occupation_check(seed: u64) -> Result<CheckResult> {
    let mut r = rng::stream(seed, Purpose::Validate, 3);
    let mut worst = 0.0f64;
    for (t, dt, h) in [(1.0f64, 1e-4, 0.02), (2.0, 1e-3, 0.01), (0.5, 1e-4, 0.05)] {
        for _ in 0..20 {
            let (_, lt) = simulate_brownian_local_time(t, dt, h, &mut r)?;
            worst = worst.max((lt.occupation_total() - t).abs());
        }
    }
    Ok(CheckResult::new(
        "occupation_identity",
        worst <= 1e-12,
        worst,
        "max |h sum L - t| over 60 paths, limit 1e-12".into(),
    ))
}

fn gaussian_cf_check(seed: u64) -> Result<CheckResult> {
    let xs = stable_draws(&StableSpec::<f64>::brownian(), CF_DRAWS, seed, 4)?;
    let worst = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|&theta| {
            let (re, im) = empirical_cf(&xs, theta);
            (re - (-theta * theta / 2.0f64).exp()).hypot(im)
        })
        .fold(0.0, f64::max);
    Ok(CheckResult::new(
        "stable_cf_beta2",
        worst <= 0.01,
        worst,
        "max |ecf - exp(-theta^2/2)| on {0.25,0.5,1,2}, limit 0.01".into(),
    ))
}
