use crate::env::Environment;
use crate::error::Result;

/// Per-walk view of the layers visited so far.
///
/// Walks move one layer at a time, so the visited set is an interval around
/// 0 and can be stored densely. Records come from [`Environment::generate`],
/// which keeps the shared cache out of the hot loop.
#[derive(Debug)]
pub struct LevelCache<'e> {
    env: &'e Environment,
    upper: Vec<CachedLevel>,
    lower: Vec<CachedLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedLevel {
    pub sign: i64,
    pub p: f64,
    pub ln_p: f64,
    /// `p/(1-p)`
    pub v: f64,
}

impl<'e> LevelCache<'e> {
    pub fn new(env: &'e Environment) -> Self {
        LevelCache {
            env,
            upper: Vec::new(),
            lower: Vec::new(),
        }
    }

    pub fn env(&self) -> &'e Environment {
        self.env
    }

    #[inline]
    pub fn get(&mut self, y: i64) -> Result<CachedLevel> {
        let (vec, idx) = if y >= 0 {
            (&mut self.upper, y as usize)
        } else {
            (&mut self.lower, (-y - 1) as usize)
        };
        if let Some(l) = vec.get(idx) {
            return Ok(*l);
        }
        let env = self.env;
        let sign = if y >= 0 { 1 } else { -1 };
        for i in vec.len()..=idx {
            let level = sign * i as i64 + if y >= 0 { 0 } else { -1 };
            let rec = env.generate(level)?;
            vec.push(CachedLevel {
                sign: rec.epsilon.sign(),
                p: rec.p,
                ln_p: rec.p.ln(),
                v: rec.v(),
            });
        }
        Ok(vec[idx])
    }

    /// Number of distinct layers materialized.
    pub fn len(&self) -> usize {
        self.upper.len() + self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
