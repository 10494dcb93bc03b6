//! The walk on the layered lattice, simulated two ways.
//!
//! * The direct chain takes one lattice step per time unit: along the layer in
//!   its orientation with probability `p_y`, otherwise up or down with
//!   probability `(1 - p_y)/2` each.
//! * The embedded chain only looks at vertical jump times `T_k`. The vertical
//!   part `S` is a simple random walk, and between jumps the walker slides
//!   `xi_k` sites along layer `S_k`, with `xi_k` geometric of mean
//!   `p/(1-p)`.
//!
//! [`position_at_time`] rebuilds the direct-time position from an embedded
//! path, and [`embedded_from_decisions`] lets the two views be driven by a
//! single decision sequence.

mod cache;
mod exact;

use std::io::Write;

use rand::RngCore;

pub use cache::{CachedLevel, LevelCache};
pub use exact::{exact_distribution, ExactDistribution, FiniteEnv, MAX_EXACT_HORIZON};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng::{closed_open_unit, open_closed_unit};

/// Below this stay probability sojourns are drawn by Bernoulli trials.
pub const TRIAL_SAMPLING_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct WalkerState {
    pub x: i64,
    pub y: i64,
    pub t: u64,
}

/// Outcome of one direct step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Horizontal,
    Up,
    Down,
}

/// Maps one random word to a step decision on a layer with stay probability `p`.
#[inline]
pub fn decide(p: f64, word: u64) -> Decision {
    let u = closed_open_unit(word);
    if u < p {
        Decision::Horizontal
    } else if (u - p) < 0.5 * (1.0 - p) {
        Decision::Up
    } else {
        Decision::Down
    }
}

#[inline]
fn apply(state: WalkerState, sign: i64, decision: Decision) -> WalkerState {
    let (dx, dy) = match decision {
        Decision::Horizontal => (sign, 0),
        Decision::Up => (0, 1),
        Decision::Down => (0, -1),
    };
    WalkerState {
        x: state.x + dx,
        y: state.y + dy,
        t: state.t + 1,
    }
}

pub fn step_direct<R: RngCore + ?Sized>(
    state: WalkerState,
    env: &Environment,
    rng: &mut R,
) -> Result<WalkerState> {
    let level = env.level(state.y)?;
    let decision = decide(level.p, rng.next_u64());
    Ok(apply(state, level.epsilon.sign(), decision))
}

pub fn simulate_direct<R: RngCore + ?Sized>(
    env: &Environment,
    n: u64,
    rng: &mut R,
) -> Result<Vec<WalkerState>> {
    Ok(simulate_direct_recorded(env, n, rng)?.0)
}

/// Direct path together with the decision taken at every step.
pub fn simulate_direct_recorded<R: RngCore + ?Sized>(
    env: &Environment,
    n: u64,
    rng: &mut R,
) -> Result<(Vec<WalkerState>, Vec<Decision>)> {
    let mut cache = LevelCache::new(env);
    let mut path = Vec::with_capacity(n as usize + 1);
    let mut decisions = Vec::with_capacity(n as usize);
    let mut state = WalkerState::default();
    path.push(state);
    for _ in 0..n {
        let level = cache.get(state.y)?;
        let d = decide(level.p, rng.next_u64());
        state = apply(state, level.sign, d);
        decisions.push(d);
        path.push(state);
    }
    Ok((path, decisions))
}

/// Replays a decision sequence through the direct kernel.
pub fn replay_direct(env: &Environment, decisions: &[Decision]) -> Result<Vec<WalkerState>> {
    let mut cache = LevelCache::new(env);
    let mut state = WalkerState::default();
    let mut path = Vec::with_capacity(decisions.len() + 1);
    path.push(state);
    for &d in decisions {
        let level = cache.get(state.y)?;
        state = apply(state, level.sign, d);
        path.push(state);
    }
    Ok(path)
}

/// Final position of a direct walk of `n` steps, plus the number of visits to
/// the origin at times `1..=h` for every `h` in `horizons`.
///
/// Runs in O(1) memory besides the visited layers.
pub fn direct_returns<R: RngCore + ?Sized>(
    cache: &mut LevelCache<'_>,
    horizons: &[u64],
    rng: &mut R,
) -> Result<(WalkerState, Vec<u64>)> {
    let mut state = WalkerState::default();
    let mut returns = 0u64;
    let mut out = Vec::with_capacity(horizons.len());
    let mut level = cache.get(0)?;
    for &h in horizons {
        while state.t < h {
            let d = decide(level.p, rng.next_u64());
            state = apply(state, level.sign, d);
            if d != Decision::Horizontal {
                level = cache.get(state.y)?;
            }
            if state.x == 0 && state.y == 0 {
                returns += 1;
            }
        }
        out.push(returns);
    }
    Ok((state, out))
}

/// Geometric sojourn on `{0, 1, 2, ...}` with `P(xi = m) = (1 - p) p^m`.
pub fn sample_sojourn<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("sojourn parameter must lie in (0,1), got {p}")));
    }
    Ok(sojourn(p, p.ln(), rng))
}

#[inline]
pub(crate) fn sojourn<R: RngCore + ?Sized>(p: f64, ln_p: f64, rng: &mut R) -> u64 {
    sojourn_and_direction(p, ln_p, rng).0
}

/// Sojourn length followed by the direction of the next vertical jump.
///
/// On the inverse-CDF branch one word serves both: its top 53 bits give the
/// uniform, its lowest bit the direction.
#[inline]
pub(crate) fn sojourn_and_direction<R: RngCore + ?Sized>(
    p: f64,
    ln_p: f64,
    rng: &mut R,
) -> (u64, i64) {
    let word = rng.next_u64();
    let dir = 1 - 2 * (word & 1) as i64;
    if p > TRIAL_SAMPLING_THRESHOLD {
        let u = open_closed_unit(word);
        // ln(u)/ln(p) >= 0, so truncation is the floor
        ((u.ln() / ln_p) as u64, dir)
    } else {
        let mut m = 0;
        while closed_open_unit(rng.next_u64()) < p {
            m += 1;
        }
        (m, dir)
    }
}

/// One realization of the embedded chain over `jumps` vertical jumps.
///
/// `levels[k] = S_k`, `times[k] = T_k`, `x[k] = X_k` for `k = 0..=jumps`;
/// `sojourns[k] = xi_k` for `k < jumps`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmbeddedPath {
    pub levels: Vec<i64>,
    pub sojourns: Vec<u64>,
    pub x: Vec<i64>,
    pub times: Vec<u64>,
}

impl EmbeddedPath {
    fn origin() -> Self {
        EmbeddedPath {
            levels: vec![0],
            sojourns: Vec::new(),
            x: vec![0],
            times: vec![0],
        }
    }

    fn push_jump(&mut self, sign: i64, sojourn: u64, dir: i64) {
        let k = self.sojourns.len();
        self.sojourns.push(sojourn);
        self.x.push(self.x[k] + sign * sojourn as i64);
        self.times.push(self.times[k] + sojourn + 1);
        self.levels.push(self.levels[k] + dir);
    }

    pub fn jumps(&self) -> usize {
        self.sojourns.len()
    }

    /// Time of the last recorded jump.
    pub fn horizon(&self) -> u64 {
        *self.times.last().expect("embedded path has T_0")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "S", "xi", "X", "T"])?;
        for k in 0..self.levels.len() {
            let xi = self.sojourns.get(k).map(|s| s.to_string()).unwrap_or_default();
            w.write_record([
                k.to_string(),
                self.levels[k].to_string(),
                xi,
                self.x[k].to_string(),
                self.times[k].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn write_direct_csv<W: Write>(path: &[WalkerState], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "x", "y"])?;
    for s in path {
        w.write_record([s.t.to_string(), s.x.to_string(), s.y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn simulate_embedded<R: RngCore + ?Sized>(
    env: &Environment,
    jumps: u64,
    rng: &mut R,
) -> Result<EmbeddedPath> {
    let mut cache = LevelCache::new(env);
    let mut path = EmbeddedPath::origin();
    path.levels.reserve(jumps as usize);
    for k in 0..jumps as usize {
        let level = cache.get(path.levels[k])?;
        let (xi, dir) = sojourn_and_direction(level.p, level.ln_p, rng);
        path.push_jump(level.sign, xi, dir);
    }
    Ok(path)
}

/// Builds the embedded path implied by a sequence of direct-step decisions.
///
/// Horizontal moves after the last vertical move belong to an unfinished
/// sojourn and are dropped.
pub fn embedded_from_decisions(env: &Environment, decisions: &[Decision]) -> Result<EmbeddedPath> {
    let mut cache = LevelCache::new(env);
    let mut path = EmbeddedPath::origin();
    let mut run = 0u64;
    for &d in decisions {
        match d {
            Decision::Horizontal => run += 1,
            Decision::Up | Decision::Down => {
                let k = path.jumps();
                let sign = cache.get(path.levels[k])?.sign;
                path.push_jump(sign, run, if d == Decision::Up { 1 } else { -1 });
                run = 0;
            }
        }
    }
    Ok(path)
}

/// Direct-time position `M_n` reconstructed from an embedded path.
pub fn position_at_time(path: &EmbeddedPath, env: &Environment, n: u64) -> Result<(i64, i64)> {
    let horizon = path.horizon();
    if n > horizon {
        return Err(Error::Range {
            what: "time",
            index: n,
            available: horizon,
        });
    }
    // U_n = max{k : T_k <= n}
    let k = path.times.partition_point(|&t| t <= n) - 1;
    let elapsed = n - path.times[k];
    if elapsed == 0 {
        return Ok((path.x[k], path.levels[k]));
    }
    let sign = env.level(path.levels[k])?.epsilon.sign();
    Ok((path.x[k] + sign * elapsed as i64, path.levels[k]))
}

/// `M_n` sampled through the embedded chain without storing the path.
pub fn embedded_position_at<R: RngCore + ?Sized>(
    cache: &mut LevelCache<'_>,
    n: u64,
    rng: &mut R,
) -> Result<(i64, i64)> {
    let (mut x, mut s, mut t) = (0i64, 0i64, 0u64);
    loop {
        let level = cache.get(s)?;
        let (xi, dir) = sojourn_and_direction(level.p, level.ln_p, rng);
        if t + xi >= n {
            return Ok((x + level.sign * (n - t) as i64, s));
        }
        x += level.sign * xi as i64;
        t += xi + 1;
        s += dir;
    }
}

/// `X_k` of the embedded chain at each jump count in `horizons` (non-decreasing).
pub fn embedded_x_at_jumps<R: RngCore + ?Sized>(
    cache: &mut LevelCache<'_>,
    horizons: &[u64],
    rng: &mut R,
) -> Result<Vec<i64>> {
    let (mut x, mut s, mut k) = (0i64, 0i64, 0u64);
    let mut out = Vec::with_capacity(horizons.len());
    for &h in horizons {
        while k < h {
            let level = cache.get(s)?;
            let (xi, dir) = sojourn_and_direction(level.p, level.ln_p, rng);
            x += level.sign * xi as i64;
            s += dir;
            k += 1;
        }
        out.push(x);
    }
    Ok(out)
}
