//! From simulated walks to measurable quantities: local times, the
//! drift/martingale split of `X`, variance and spread curves, fitted scaling
//! exponents and return counts.
//!
//! Every annealed estimator draws replica `i` from environment seed
//! `environment_seed(seed, i)` and walk stream `replica_stream(seed, i)`, and
//! gathers per-replica results in index order, so outputs do not depend on
//! the number of threads.

mod estimate;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use estimate::{
    central_spread, fit_exponent, jackknife_se, jackknife_variance, mean, mean_se,
    quantile_select, quantile_sorted, sample_variance, spread_with_bootstrap, CurvePoint,
    ScalingEstimate,
};

use crate::env::{Environment, OrientationScheme, StayProbLaw};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::scalar::CompensatedSum;
use crate::walk::{self, EmbeddedPath, LevelCache};

pub const JACKKNIFE_BLOCKS: usize = 100;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// `N_m(y)`: visits of the jump chain to layer `y` among `S_0..S_{m-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalTimeProfile {
    pub m: u64,
    pub counts: BTreeMap<i64, u64>,
}

impl LocalTimeProfile {
    pub fn get(&self, y: i64) -> u64 {
        self.counts.get(&y).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `sum_y N_m(y)^2`, the self-intersection local time.
    pub fn self_intersections(&self) -> u64 {
        self.counts.values().map(|c| c * c).sum()
    }
}

pub fn local_time_profile(levels: &[i64], m: u64) -> Result<LocalTimeProfile> {
    if m as usize > levels.len() {
        return Err(Error::Range {
            what: "jump horizon",
            index: m,
            available: levels.len() as u64,
        });
    }
    let mut counts = BTreeMap::new();
    for &y in &levels[..m as usize] {
        *counts.entry(y).or_insert(0) += 1;
    }
    Ok(LocalTimeProfile { m, counts })
}

/// `X_m = D_m + Sbar_m`: environment drift plus the centred sojourn noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    /// `sum_y eps_y p_y/(1-p_y) N_m(y)`
    pub drift: f64,
    /// `sum_{k<m} eps_{S_k} (xi_k - p/(1-p))`
    pub martingale: f64,
    pub x: i64,
}

impl Decomposition {
    /// `X - (D + Sbar)`, zero up to rounding.
    pub fn residual(&self) -> f64 {
        self.x as f64 - (self.drift + self.martingale)
    }
}

pub fn decompose(path: &EmbeddedPath, env: &Environment, m: u64) -> Result<Decomposition> {
    if m as usize > path.jumps() {
        return Err(Error::Range {
            what: "jump horizon",
            index: m,
            available: path.jumps() as u64,
        });
    }
    let profile = local_time_profile(&path.levels, m)?;
    let mut drift = CompensatedSum::new();
    for (&y, &count) in &profile.counts {
        let rec = env.level(y)?;
        drift.add(rec.epsilon.sign() as f64 * rec.v() * count as f64);
    }
    let mut noise = CompensatedSum::new();
    for k in 0..m as usize {
        let rec = env.level(path.levels[k])?;
        noise.add(rec.epsilon.sign() as f64 * (path.sojourns[k] as f64 - rec.v()));
    }
    Ok(Decomposition {
        drift: drift.value(),
        martingale: noise.value(),
        x: path.x[m as usize],
    })
}

/// Runs `f(i)` for replicas `range`, in parallel, returning results in index order.
pub fn map_replicas<T, F>(range: std::ops::Range<u64>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    range.into_par_iter().map(f).collect()
}

/// Fresh environment for annealed replica `i`.
pub fn replica_environment(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    seed: u64,
    replica: u64,
) -> Result<Environment> {
    Environment::new(scheme.clone(), *law, rng::environment_seed(seed, replica))
}

fn check_horizons(horizons: &[u64]) -> Result<()> {
    if horizons.is_empty() {
        return Err(Error::config("horizons", "must be non-empty"));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("horizons", "horizons must be increasing"));
    }
    Ok(())
}

/// Annealed samples of `X_k` at each jump count in `jumps`; `out[h][i]` is
/// replica `i` at horizon `h`.
pub fn sample_x_annealed(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    jumps: &[u64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_horizons(jumps)?;
    let per_replica = map_replicas(0..replicas, |i| {
        let env = replica_environment(law, scheme, seed, i)?;
        let mut cache = LevelCache::new(&env);
        walk::embedded_x_at_jumps(&mut cache, jumps, &mut rng::replica_stream(seed, i))
    })?;
    Ok((0..jumps.len())
        .map(|h| per_replica.iter().map(|xs| xs[h] as f64).collect())
        .collect())
}

fn require_finite_variance(law: &StayProbLaw, force: bool) -> Result<()> {
    let finite = matches!(law.v_moments(), Ok(m) if m.second.is_some());
    if finite || force {
        Ok(())
    } else {
        Err(Error::InfiniteVariance(format!("law {law}")))
    }
}

/// Variance curve from per-horizon samples, with block-jackknife errors.
pub fn variance_curve(horizons: &[u64], samples: &[Vec<f64>]) -> Result<Vec<CurvePoint<f64>>> {
    horizons
        .iter()
        .zip(samples)
        .map(|(&n, xs)| {
            let (var, se, _) = jackknife_variance(xs, JACKKNIFE_BLOCKS)?;
            Ok(CurvePoint { n, value: var, se })
        })
        .collect()
}

/// Standard-deviation curve; the jackknife runs on the leave-out square roots.
pub fn sd_curve(horizons: &[u64], samples: &[Vec<f64>]) -> Result<Vec<CurvePoint<f64>>> {
    horizons
        .iter()
        .zip(samples)
        .map(|(&n, xs)| {
            let (var, _, leave_out) = jackknife_variance(xs, JACKKNIFE_BLOCKS)?;
            let roots: Vec<f64> = leave_out.iter().map(|v| v.sqrt()).collect();
            Ok(CurvePoint {
                n,
                value: var.sqrt(),
                se: jackknife_se(&roots),
            })
        })
        .collect()
}

/// Central `[q, 1-q]` spread curve with bootstrap errors.
pub fn spread_curve(
    horizons: &[u64],
    samples: &[Vec<f64>],
    q: f64,
    seed: u64,
) -> Result<Vec<CurvePoint<f64>>> {
    horizons
        .iter()
        .zip(samples)
        .enumerate()
        .map(|(h, (&n, xs))| {
            let mut rng = rng::stream(seed, Purpose::Bootstrap, h as u64);
            let (spread, se) = spread_with_bootstrap(xs, q, BOOTSTRAP_RESAMPLES, &mut rng)?;
            Ok(CurvePoint {
                n,
                value: spread,
                se,
            })
        })
        .collect()
}

/// Annealed `Var(X_{2n})` for each `n` in `horizons`.
///
/// Refuses laws whose `p/(1-p)` has infinite variance unless `force` is set.
pub fn estimate_variance(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    horizons: &[u64],
    replicas: u64,
    seed: u64,
    force: bool,
) -> Result<Vec<CurvePoint<f64>>> {
    require_finite_variance(law, force)?;
    if replicas < 2 {
        return Err(Error::config("replicas", "variance needs at least 2 replicas"));
    }
    let jumps: Vec<u64> = horizons.iter().map(|n| 2 * n).collect();
    let samples = sample_x_annealed(law, scheme, &jumps, replicas, seed)?;
    variance_curve(horizons, &samples)
}

/// Annealed central spread of `X_n` for each jump count `n` in `horizons`.
pub fn quantile_spread(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    horizons: &[u64],
    replicas: u64,
    seed: u64,
    q: f64,
) -> Result<Vec<CurvePoint<f64>>> {
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::config("quantile", format!("must lie in (0, 0.5), got {q}")));
    }
    if replicas < 100 {
        return Err(Error::config("replicas", "quantile spread needs at least 100 replicas"));
    }
    let samples = sample_x_annealed(law, scheme, horizons, replicas, seed)?;
    spread_curve(horizons, &samples, q, seed)
}

/// Mean number of visits to the origin at times `1..=h`, per horizon `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnStats {
    pub horizons: Vec<u64>,
    pub mean_returns: Vec<f64>,
    pub std_error: Vec<f64>,
    per_replica: Vec<Vec<u64>>,
}

impl ReturnStats {
    pub fn from_counts(horizons: Vec<u64>, per_replica: Vec<Vec<u64>>) -> Self {
        let col = |h: usize| -> Vec<f64> { per_replica.iter().map(|r| r[h] as f64).collect() };
        let (mut mean_returns, mut std_error) = (Vec::new(), Vec::new());
        for h in 0..horizons.len() {
            let xs = col(h);
            mean_returns.push(mean(&xs));
            std_error.push(if xs.len() > 1 { mean_se(&xs) } else { 0.0 });
        }
        ReturnStats {
            horizons,
            mean_returns,
            std_error,
            per_replica,
        }
    }

    pub fn replicas(&self) -> usize {
        self.per_replica.len()
    }

    /// Growth of the mean between horizons `from` and `to` (indices).
    pub fn growth(&self, from: usize, to: usize) -> f64 {
        self.mean_returns[to] - self.mean_returns[from]
    }

    /// `sqrt(se_from^2 + se_to^2)`.
    pub fn combined_se(&self, from: usize, to: usize) -> f64 {
        self.std_error[from].hypot(self.std_error[to])
    }

    /// Standard error of the growth from paired per-replica differences.
    pub fn paired_growth_se(&self, from: usize, to: usize) -> f64 {
        let d: Vec<f64> = self
            .per_replica
            .iter()
            .map(|r| r[to] as f64 - r[from] as f64)
            .collect();
        mean_se(&d)
    }
}

/// Per-replica return counts for replicas in `range` (direct simulator).
pub fn return_counts(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    horizons: &[u64],
    seed: u64,
    range: std::ops::Range<u64>,
) -> Result<Vec<Vec<u64>>> {
    map_replicas(range, |i| {
        let env = replica_environment(law, scheme, seed, i)?;
        let mut cache = LevelCache::new(&env);
        let (_, counts) = walk::direct_returns(&mut cache, horizons, &mut rng::replica_stream(seed, i))?;
        Ok(counts)
    })
}

pub fn count_returns(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    horizons: &[u64],
    replicas: u64,
    seed: u64,
) -> Result<ReturnStats> {
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("horizons", "horizons must be increasing"));
    }
    let counts = return_counts(law, scheme, horizons, seed, 0..replicas)?;
    Ok(ReturnStats::from_counts(horizons.to_vec(), counts))
}
