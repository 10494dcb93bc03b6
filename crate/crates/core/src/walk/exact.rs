use std::collections::BTreeMap;

use crate::env::{Environment, Orientation};
use crate::error::{Error, Result};
use crate::scalar::Probability;

/// Largest horizon accepted by [`exact_distribution`].
pub const MAX_EXACT_HORIZON: u64 = 20;

/// Explicit orientations and stay probabilities on finitely many layers.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteEnv<P> {
    levels: BTreeMap<i64, (Orientation, P)>,
}

impl<P: Probability> FiniteEnv<P> {
    pub fn new(levels: impl IntoIterator<Item = (i64, Orientation, P)>) -> Self {
        FiniteEnv {
            levels: levels.into_iter().map(|(y, o, p)| (y, (o, p))).collect(),
        }
    }

    /// Layers `-radius..=radius` with alternating orientation and a common `p`.
    pub fn alternating(radius: i64, p: P) -> Self {
        Self::new((-radius..=radius).map(|y| {
            let o = if y.rem_euclid(2) == 0 {
                Orientation::Right
            } else {
                Orientation::Left
            };
            (y, o, p.clone())
        }))
    }

    fn get(&self, y: i64) -> Result<&(Orientation, P)> {
        self.levels.get(&y).ok_or(Error::LevelNotInScheme(y))
    }
}

impl FiniteEnv<f64> {
    /// Snapshot of layers `-radius..=radius` of a random environment.
    pub fn from_environment(env: &Environment, radius: i64) -> Result<Self> {
        let levels = (-radius..=radius)
            .map(|y| env.level(y).map(|r| (y, r.epsilon, r.p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(levels))
    }
}

/// Law of `M_n` under a fixed environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution<P> {
    pub horizon: u64,
    pub mass: BTreeMap<(i64, i64), P>,
}

impl<P: Probability> ExactDistribution<P> {
    pub fn mass_at(&self, x: i64, y: i64) -> P {
        self.mass.get(&(x, y)).cloned().unwrap_or_else(P::zero)
    }

    pub fn total(&self) -> P {
        self.mass.values().cloned().fold(P::zero(), |a, b| a + b)
    }
}

impl ExactDistribution<f64> {
    /// Total-variation distance to an empirical law given as site counts.
    pub fn total_variation(&self, counts: &BTreeMap<(i64, i64), u64>) -> f64 {
        let n: u64 = counts.values().sum();
        let mut tv = 0.0;
        for (site, &p) in &self.mass {
            let q = counts.get(site).copied().unwrap_or(0) as f64 / n as f64;
            tv += (p - q).abs();
        }
        for (site, &c) in counts {
            if !self.mass.contains_key(site) {
                tv += c as f64 / n as f64;
            }
        }
        0.5 * tv
    }
}

/// Forward dynamic programming over the one-step kernel.
pub fn exact_distribution<P: Probability>(
    env: &FiniteEnv<P>,
    n: u64,
) -> Result<ExactDistribution<P>> {
    if n > MAX_EXACT_HORIZON {
        return Err(Error::Resource(format!(
            "exact distribution limited to n <= {MAX_EXACT_HORIZON}, got {n}"
        )));
    }
    let two = P::one() + P::one();
    let mut mass: BTreeMap<(i64, i64), P> = BTreeMap::new();
    mass.insert((0, 0), P::one());
    for _ in 0..n {
        let mut next: BTreeMap<(i64, i64), P> = BTreeMap::new();
        for ((x, y), m) in mass {
            let (o, p) = env.get(y)?;
            let vertical = (P::one() - p.clone()) / two.clone() * m.clone();
            let moves = [
                ((x + o.sign(), y), p.clone() * m),
                ((x, y + 1), vertical.clone()),
                ((x, y - 1), vertical),
            ];
            for (site, w) in moves {
                let e = next.entry(site).or_insert_with(P::zero);
                *e = e.clone() + w;
            }
        }
        mass = next;
    }
    Ok(ExactDistribution { horizon: n, mass })
}
