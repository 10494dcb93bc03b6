//! Limit objects of the horizontal scaling: stable increments `Z`, a Brownian
//! motion `B` with its local time `L`, and `Delta_t = int L_t(x) dZ_x`.
//!
//! `Delta_t` is approximated by an Euler walk for `B`, occupation-time binning
//! for `L` on a grid of width `h`, and independent stable increments of `Z`
//! over each bin.

use std::io::Write;

use rand::Rng;

use crate::env::{theoretical_constants, OrientationScheme, StayProbLaw, TheoreticalConstants};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::scalar::{CompensatedSum, Real};
use crate::stats::{map_replicas, quantile_sorted, replica_environment};
use crate::walk::{embedded_position_at, LevelCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skew {
    Symmetric,
    /// Maximally right-skewed (the law of a centred sum of positive variables).
    TotallySkewed,
}

/// Law of the increment of `Z` over unit length.
///
/// Symmetric: `E exp(i theta Z_1) = exp(-a1 |theta|^beta)`. Totally skewed:
/// `exp(-a1 |theta|^beta (1 - i tan(pi beta / 2) sgn theta))`. `beta = 2` is
/// the Gaussian with variance `2 a1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSpec<F> {
    pub beta: F,
    pub a1: F,
    pub skew: Skew,
}

impl<F: Real> StableSpec<F> {
    pub fn new(beta: F, a1: F, skew: Skew) -> Result<Self> {
        if !(beta > F::one() && beta <= F::lit(2.0)) {
            return Err(Error::Domain(format!("stable index must lie in (1,2], got {beta}")));
        }
        if !(a1 > F::zero() && a1.is_finite()) {
            return Err(Error::Domain(format!("stable scale a1 must be > 0, got {a1}")));
        }
        Ok(StableSpec { beta, a1, skew })
    }

    pub fn symmetric(beta: F, a1: F) -> Result<Self> {
        Self::new(beta, a1, Skew::Symmetric)
    }

    /// Two-sided standard Brownian motion.
    pub fn brownian() -> Self {
        StableSpec {
            beta: F::lit(2.0),
            a1: F::lit(0.5),
            skew: Skew::Symmetric,
        }
    }

    /// Self-similarity exponent of `Delta`: `1/2 + 1/(2 beta)`.
    pub fn delta_exponent(&self) -> F {
        F::lit(0.5) + F::lit(0.5) / self.beta
    }

    /// Spec of `sigma * Z`.
    pub fn scaled_by(&self, sigma: F) -> Self {
        StableSpec {
            a1: self.a1 * sigma.abs().powf(self.beta),
            ..*self
        }
    }

    /// Characteristic function of `Z_1`, as `(re, im)`.
    pub fn characteristic_function(&self, theta: F) -> (F, F) {
        let mag = self.a1 * theta.abs().powf(self.beta);
        let modulus = (-mag).exp();
        match self.skew {
            Skew::Symmetric => (modulus, F::zero()),
            Skew::TotallySkewed => {
                let phase = if self.beta == F::lit(2.0) {
                    F::zero()
                } else {
                    mag * (F::pi() * self.beta / F::lit(2.0)).tan() * theta.signum()
                };
                (modulus * phase.cos(), modulus * phase.sin())
            }
        }
    }
}

/// One increment of `Z` over an interval of length `length`.
///
/// Chambers-Mallows-Stuck: a uniform angle and a unit exponential.
pub fn sample_stable<F: Real, R: Rng + ?Sized>(
    spec: &StableSpec<F>,
    length: F,
    rng: &mut R,
) -> Result<F> {
    let spec = StableSpec::new(spec.beta, spec.a1, spec.skew)?;
    if !(length > F::zero()) {
        return Err(Error::Domain(format!("increment length must be > 0, got {length}")));
    }
    Ok(stable_increment(&spec, length, rng))
}

#[inline]
fn stable_increment<F: Real, R: Rng + ?Sized>(spec: &StableSpec<F>, length: F, rng: &mut R) -> F {
    let two = F::lit(2.0);
    let alpha = spec.beta;
    if alpha == two {
        return (two * spec.a1 * length).sqrt() * F::standard_normal(rng);
    }
    let half_pi = F::pi() / two;
    let u = (F::unit(rng) - F::lit(0.5)) * F::pi();
    let w = F::standard_exponential(rng);
    let z = match spec.skew {
        Skew::Symmetric => {
            (alpha * u).sin() / u.cos().powf(alpha.recip())
                * ((u - alpha * u).cos() / w).powf((F::one() - alpha) / alpha)
        }
        Skew::TotallySkewed => {
            let t = (half_pi * alpha).tan();
            let b = t.atan() / alpha;
            let s = (F::one() + t * t).powf(F::one() / (two * alpha));
            s * (alpha * (u + b)).sin() / u.cos().powf(alpha.recip())
                * ((u - alpha * (u + b)).cos() / w).powf((F::one() - alpha) / alpha)
        }
    };
    (spec.a1 * length).powf(alpha.recip()) * z
}

/// Occupation density of a Brownian path on the grid `x_i = i h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLocalTime<F> {
    pub t: F,
    pub bin_width: F,
    /// Grid index of `bins[0]`.
    pub first_index: i64,
    pub bins: Vec<F>,
}

impl<F: Real> GridLocalTime<F> {
    pub fn empty(t: F, bin_width: F) -> Self {
        GridLocalTime {
            t,
            bin_width,
            first_index: 0,
            bins: Vec::new(),
        }
    }

    pub fn centre(&self, i: usize) -> F {
        F::from_int(self.first_index + i as i64) * self.bin_width
    }

    /// `L_t` at the bin containing `x`.
    pub fn at(&self, x: F) -> F {
        let idx = grid_index(x, self.bin_width) - self.first_index;
        if idx < 0 {
            return F::zero();
        }
        self.bins.get(idx as usize).copied().unwrap_or_else(F::zero)
    }

    /// `h * sum_i L_t(x_i)`, equal to `t`.
    pub fn occupation_total(&self) -> F {
        let s: CompensatedSum<F> = self.bins.iter().copied().collect();
        s.value() * self.bin_width
    }
}

#[inline]
fn grid_index<F: Real>(x: F, h: F) -> i64 {
    (x / h + F::lit(0.5)).floor().to_i64().expect("finite position")
}

fn step_count<F: Real>(t: F, dt: F) -> Result<u64> {
    if !(dt > F::zero()) {
        return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
    }
    if !(t >= F::zero() && t.is_finite()) {
        return Err(Error::Domain(format!("time horizon must be >= 0, got {t}")));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > F::lit(1e-9) * t.max(F::one()) {
        return Err(Error::Domain(format!("t/dt must be an integer (t = {t}, dt = {dt})")));
    }
    steps
        .to_u64()
        .ok_or_else(|| Error::Resource(format!("{t}/{dt} steps")))
}

/// Visit counts per bin, grown on both sides as the path wanders.
struct Binner<F> {
    h: F,
    upper: Vec<u64>,
    lower: Vec<u64>,
}

impl<F: Real> Binner<F> {
    fn new(h: F) -> Result<Self> {
        if !(h > F::zero()) {
            return Err(Error::Domain(format!("bin width must be > 0, got {h}")));
        }
        Ok(Binner {
            h,
            upper: Vec::new(),
            lower: Vec::new(),
        })
    }

    #[inline]
    fn add(&mut self, x: F) {
        let idx = grid_index(x, self.h);
        let (side, slot) = if idx >= 0 {
            (&mut self.upper, idx as usize)
        } else {
            (&mut self.lower, (-idx - 1) as usize)
        };
        if slot >= side.len() {
            side.resize(slot + 1, 0);
        }
        side[slot] += 1;
    }

    fn finish(self, t: F, dt: F) -> GridLocalTime<F> {
        let weight = dt / self.h;
        let first_index = -(self.lower.len() as i64);
        let bins = self
            .lower
            .iter()
            .rev()
            .chain(self.upper.iter())
            .map(|&c| F::from_count(c) * weight)
            .collect();
        GridLocalTime {
            t,
            bin_width: self.h,
            first_index,
            bins,
        }
    }
}

/// Occupation density of a path sampled every `dt`; `positions` holds the
/// `t/dt` values at times `0, dt, .., t - dt`.
pub fn occupation_density<F: Real>(
    positions: impl IntoIterator<Item = F>,
    t: F,
    dt: F,
    bin_width: F,
) -> Result<GridLocalTime<F>> {
    let steps = step_count(t, dt)?;
    let mut bins = Binner::new(bin_width)?;
    let mut seen = 0u64;
    for x in positions {
        bins.add(x);
        seen += 1;
    }
    if seen != steps {
        return Err(Error::Domain(format!("expected {steps} positions, got {seen}")));
    }
    Ok(bins.finish(t, dt))
}

/// Euler path of a standard Brownian motion on `[0, t]` and its occupation
/// density; returns `(B_t, L_t)`.
pub fn simulate_brownian_local_time<F: Real, R: Rng + ?Sized>(
    t: F,
    dt: F,
    bin_width: F,
    rng: &mut R,
) -> Result<(F, GridLocalTime<F>)> {
    let steps = step_count(t, dt)?;
    let mut bins = Binner::new(bin_width)?;
    let sd = dt.sqrt();
    let mut b = F::zero();
    for _ in 0..steps {
        bins.add(b);
        b = b + sd * F::standard_normal(rng);
    }
    Ok((b, bins.finish(t, dt)))
}

/// `sum_i L(x_i) dZ_i` with fresh independent increments over each bin.
pub fn integrate_local_time<F: Real, R: Rng + ?Sized>(
    lt: &GridLocalTime<F>,
    spec: &StableSpec<F>,
    rng: &mut R,
) -> F {
    let mut acc = CompensatedSum::new();
    for &l in &lt.bins {
        acc.add(l * stable_increment(spec, lt.bin_width, rng));
    }
    acc.value()
}

/// One draw of `(Delta_t, B_t)` with `Z` independent of `B`.
pub fn simulate_delta<F: Real, R: Rng + ?Sized>(
    t: F,
    spec: &StableSpec<F>,
    dt: F,
    bin_width: F,
    rng: &mut R,
) -> Result<(F, F)> {
    let spec = StableSpec::new(spec.beta, spec.a1, spec.skew)?;
    let (endpoint, lt) = simulate_brownian_local_time(t, dt, bin_width, rng)?;
    Ok((integrate_local_time(&lt, &spec, rng), endpoint))
}

/// Default Euler step `1e-4 t`.
pub fn default_dt<F: Real>(t: F) -> F {
    F::lit(1e-4) * t
}

/// Default bin width `0.02 sqrt(t)`.
pub fn default_bin_width<F: Real>(t: F) -> F {
    F::lit(0.02) * t.sqrt()
}

/// Independent draws of `Delta_t` (and the matching `B_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample<F> {
    pub t: F,
    pub values: Vec<F>,
    pub endpoints: Vec<F>,
    pub spec: StableSpec<F>,
    pub dt: F,
    pub bin_width: F,
    pub seed: u64,
}

impl<F: Real> LimitSample<F> {
    /// One value per line after a `#` metadata line and a `value` header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# beta={},a1={},t={},dt={},h={},seed={}",
            self.spec.beta, self.spec.a1, self.t, self.dt, self.bin_width, self.seed
        )
        .map_err(|e| Error::io("<csv>", e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value"])?;
        for v in &self.values {
            w.write_record([v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// `draws` independent `(Delta_t, B_t)` pairs; draw `i` uses stream `(seed, i)`.
pub fn sample_delta<F: Real>(
    t: F,
    spec: &StableSpec<F>,
    dt: F,
    bin_width: F,
    draws: u64,
    seed: u64,
) -> Result<LimitSample<F>> {
    let pairs = map_replicas(0..draws, |i| {
        simulate_delta(t, spec, dt, bin_width, &mut rng::stream(seed, Purpose::Limit, i))
    })?;
    let (values, endpoints) = pairs.into_iter().unzip();
    Ok(LimitSample {
        t,
        values,
        endpoints,
        spec: *spec,
        dt,
        bin_width,
        seed,
    })
}

pub const COMPARISON_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<F> {
    pub ks: F,
    /// `(level, quantile of a, quantile of b)`
    pub quantiles: Vec<(F, F, F)>,
}

impl<F: Real> Comparison<F> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "level", "a", "b"])?;
        for (level, a, b) in &self.quantiles {
            w.write_record(["quantile".to_string(), level.to_string(), a.to_string(), b.to_string()])?;
        }
        w.write_record(["ks".to_string(), String::new(), self.ks.to_string(), String::new()])?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn sorted<F: Real>(xs: &[F]) -> Result<Vec<F>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered"));
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov statistic on sorted inputs.
pub fn ks_sorted<F: Real>(a: &[F], b: &[F]) -> F {
    let (na, nb) = (F::from_count(a.len() as u64), F::from_count(b.len() as u64));
    let (mut i, mut j) = (0, 0);
    let mut d = F::zero();
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let gap = (F::from_count(i as u64) / na - F::from_count(j as u64) / nb).abs();
        d = d.max(gap);
    }
    d
}

pub fn compare_distributions<F: Real>(a: &[F], b: &[F]) -> Result<Comparison<F>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("comparison needs two non-empty samples".into()));
    }
    let (sa, sb) = (sorted(a)?, sorted(b)?);
    let quantiles = COMPARISON_LEVELS
        .iter()
        .map(|&l| {
            let l = F::lit(l);
            (l, quantile_sorted(&sa, l), quantile_sorted(&sb, l))
        })
        .collect();
    Ok(Comparison {
        ks: ks_sorted(&sa, &sb),
        quantiles,
    })
}

/// Walk positions at time `n`, normalized so their targets are `Delta_1` and `B_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledSample {
    pub n: u64,
    /// `n^-delta M_n^(1) / (gamma^-delta sigma)`
    pub x: Vec<f64>,
    /// `n^-1/2 M_n^(2) gamma^1/2`
    pub y: Vec<f64>,
    pub constants: TheoreticalConstants,
    pub sigma: f64,
}

/// Raw annealed samples of `M_n`, one per replica.
pub fn walk_positions(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    n: u64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<(i64, i64)>> {
    map_replicas(0..replicas, |i| {
        let env = replica_environment(law, scheme, seed, i)?;
        let mut cache = LevelCache::new(&env);
        embedded_position_at(&mut cache, n, &mut rng::replica_stream(seed, i))
    })
}

pub fn rescaled_walk_sample(
    law: &StayProbLaw,
    scheme: &OrientationScheme,
    n: u64,
    replicas: u64,
    seed: u64,
) -> Result<RescaledSample> {
    let constants = theoretical_constants(law)?;
    let sigma = constants.sigma_for(scheme)?;
    if sigma == 0.0 {
        return Err(Error::DegenerateLimit(format!("sigma = 0 for {law} with {scheme}")));
    }
    let positions = walk_positions(law, scheme, n, replicas, seed)?;
    let nf = n as f64;
    let x_scale = nf.powf(-constants.delta) / (constants.gamma.powf(-constants.delta) * sigma);
    let y_scale = (constants.gamma / nf).sqrt();
    let (x, y) = positions
        .iter()
        .map(|&(mx, my)| (mx as f64 * x_scale, my as f64 * y_scale))
        .unzip();
    Ok(RescaledSample {
        n,
        x,
        y,
        constants,
        sigma,
    })
}

/// Empirical `A_1` of the stable law attracting centred sums of `p/(1-p)`.
///
/// Matches the median of `|n^{-1/beta} sum_{k<=n} (V_k - E V)|` against that
/// of a totally skewed stable variable with `a1 = 1`.
pub fn calibrate_a1(law: &StayProbLaw, n: u64, draws: u64, seed: u64) -> Result<f64> {
    let constants = theoretical_constants(law)?;
    let beta = constants.beta;
    let norm = (n as f64).powf(-1.0 / beta);
    let sums = map_replicas(0..draws, |i| {
        let mut r = rng::stream(seed, Purpose::Limit, i);
        let mut acc = CompensatedSum::new();
        for _ in 0..n {
            let p = law.sample(&mut r);
            acc.add(p / (1.0 - p) - constants.mean_v);
        }
        Ok((acc.value() * norm).abs())
    })?;
    let skew = if beta < 2.0 { Skew::TotallySkewed } else { Skew::Symmetric };
    let unit = StableSpec::new(beta, 1.0, skew)?;
    let mut r = rng::stream(seed ^ 0x5eed, Purpose::Limit, u64::MAX);
    let reference: Vec<f64> = (0..draws)
        .map(|_| stable_increment(&unit, 1.0, &mut r).abs())
        .collect();
    let med = |xs: Vec<f64>| -> Result<f64> { Ok(quantile_sorted(&sorted(&xs)?, 0.5)) };
    Ok((med(sums)? / med(reference)?).powf(beta))
}

/// Target law of `Z` for the normalized horizontal coordinate.
///
/// `beta = 2`: standard Brownian `Z` (the walk side is divided by `sigma`).
/// `beta < 2`: symmetric stable with calibrated `a1`, `sigma = 1`.
pub fn limit_spec(law: &StayProbLaw, calibrated_a1: Option<f64>) -> Result<StableSpec<f64>> {
    let c = theoretical_constants(law)?;
    if c.beta == 2.0 {
        Ok(StableSpec::brownian())
    } else {
        let a1 = calibrated_a1.ok_or_else(|| {
            Error::Domain(format!("law {law} needs a calibrated a1 for its stable limit"))
        })?;
        StableSpec::symmetric(c.beta, a1)
    }
}

/// Empirical characteristic function `(mean cos, mean sin)` at `theta`.
pub fn empirical_cf<F: Real>(xs: &[F], theta: F) -> (F, F) {
    let n = F::from_count(xs.len() as u64);
    let (mut c, mut s) = (CompensatedSum::new(), CompensatedSum::new());
    for &x in xs {
        c.add((theta * x).cos());
        s.add((theta * x).sin());
    }
    (c.value() / n, s.value() / n)
}

/// Draws `count` increments over unit length using stream `(seed, index)`.
pub fn stable_draws<F: Real>(spec: &StableSpec<F>, count: usize, seed: u64, index: u64) -> Result<Vec<F>> {
    let spec = StableSpec::new(spec.beta, spec.a1, spec.skew)?;
    let mut r = rng::stream(seed, Purpose::Limit, index);
    Ok((0..count).map(|_| stable_increment(&spec, F::one(), &mut r)).collect())
}
