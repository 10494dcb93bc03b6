//! Random environments: orientation of each horizontal layer and the
//! probability of staying on it.
//!
//! An [`Environment`] is never generated up front. `level(y)` derives the
//! record for layer `y` from a keyed stream `(master_seed, y)`, so any two
//! environments built from the same `(scheme, law, seed)` agree on every layer
//! no matter which layers were queried first or by how many threads.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Stay probabilities are kept inside `[P_FLOOR, 1 - P_FLOOR]`.
pub const P_FLOOR: f64 = 1e-12;

/// Direction of travel on a horizontal layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Right,
    Left,
}

impl Orientation {
    #[inline]
    pub fn sign(self) -> i64 {
        match self {
            Orientation::Right => 1,
            Orientation::Left => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Orientation::Right),
            -1 => Ok(Orientation::Left),
            other => Err(Error::Domain(format!("orientation sign must be +1 or -1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrientationScheme {
    /// `epsilon_y = (-1)^y`, so layer 0 points right.
    Alternating,
    /// Independent fair signs, independent of the stay probabilities.
    IidRademacher,
    /// Explicit orientations for a finite set of layers.
    Fixed(BTreeMap<i64, Orientation>),
}

impl OrientationScheme {
    pub fn fixed(levels: impl IntoIterator<Item = (i64, Orientation)>) -> Self {
        OrientationScheme::Fixed(levels.into_iter().collect())
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrientationScheme::Alternating => "alternating",
            OrientationScheme::IidRademacher => "iid_rademacher",
            OrientationScheme::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for OrientationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrientationScheme::Fixed(levels) => {
                write!(f, "fixed(")?;
                for (i, (y, o)) in levels.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{y}:{}", if o.sign() > 0 { "+1" } else { "-1" })?;
                }
                write!(f, ")")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Law of the i.i.d. stay probabilities `p_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StayProbLaw {
    Constant { p: f64 },
    /// `p = hi` with probability `w`, otherwise `p = lo`.
    TwoPoint { lo: f64, hi: f64, w: f64 },
    Beta { a: f64, b: f64 },
    /// `V = p/(1-p) = scale * (U^(-1/beta) - 1) + offset`, a Pareto-type law
    /// with tail index `beta`.
    StableTail { beta: f64, scale: f64, offset: f64 },
}

impl fmt::Display for StayProbLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StayProbLaw::Constant { p } => write!(f, "constant({p})"),
            StayProbLaw::TwoPoint { lo, hi, w } => write!(f, "two_point({lo},{hi},{w})"),
            StayProbLaw::Beta { a, b } => write!(f, "beta({a},{b})"),
            StayProbLaw::StableTail {
                beta,
                scale,
                offset,
            } => {
                if offset == 0.0 {
                    write!(f, "stable_tail({beta},{scale})")
                } else {
                    write!(f, "stable_tail({beta},{scale},{offset})")
                }
            }
        }
    }
}

/// Splits `name(a,b,..)` into the name and its trimmed arguments.
fn split_literal(text: &str) -> Result<(&str, Vec<&str>)> {
    let text = text.trim();
    let Some(open) = text.find('(') else {
        return Ok((text, Vec::new()));
    };
    let inner = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::Domain(format!("unbalanced parentheses in `{text}`")))?;
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Ok((text[..open].trim(), args))
}

/// A decimal number or a fraction `a/b`.
fn parse_number(name: &str, text: &str) -> Result<f64> {
    let bad = || Error::config(name, format!("not a number: `{text}`"));
    match text.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => text.parse().map_err(|_| bad()),
    }
}

impl FromStr for OrientationScheme {
    type Err = Error;

    /// `alternating`, `iid_rademacher` or `fixed(y:+1,y:-1,..)`.
    fn from_str(text: &str) -> Result<Self> {
        let (name, args) = split_literal(text)?;
        match name {
            "alternating" | "iid_rademacher" if !args.is_empty() => {
                Err(Error::config("scheme", format!("`{name}` takes no arguments")))
            }
            "alternating" => Ok(OrientationScheme::Alternating),
            "iid_rademacher" => Ok(OrientationScheme::IidRademacher),
            "fixed" => {
                let mut levels = BTreeMap::new();
                for a in args {
                    let (y, sign) = a
                        .split_once(':')
                        .ok_or_else(|| Error::config("scheme", format!("expected `level:sign`, got `{a}`")))?;
                    let y: i64 = y
                        .trim()
                        .parse()
                        .map_err(|_| Error::config("scheme", format!("bad level `{y}`")))?;
                    let sign: i64 = sign
                        .trim()
                        .trim_start_matches('+')
                        .parse()
                        .map_err(|_| Error::config("scheme", format!("bad sign `{sign}`")))?;
                    let o = Orientation::from_sign(sign).map_err(|e| Error::config("scheme", e.to_string()))?;
                    if levels.insert(y, o).is_some() {
                        return Err(Error::config("scheme", format!("level {y} given twice")));
                    }
                }
                Ok(OrientationScheme::Fixed(levels))
            }
            other => Err(Error::config(
                "scheme",
                format!("unknown scheme `{other}` (alternating, iid_rademacher, fixed(..))"),
            )),
        }
    }
}

impl FromStr for StayProbLaw {
    type Err = Error;

    /// The forms printed by `Display`; numbers may be fractions such as `1/3`.
    fn from_str(text: &str) -> Result<Self> {
        let (name, args) = split_literal(text)?;
        let arity = |want: &[usize]| -> Result<()> {
            if want.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::config("law", format!("`{name}` takes {want:?} arguments, got {}", args.len())))
            }
        };
        let num = |i: usize, label: &str| parse_number(label, args[i]);
        match name {
            "constant" => {
                arity(&[1])?;
                StayProbLaw::constant(num(0, "p")?)
            }
            "two_point" => {
                arity(&[3])?;
                StayProbLaw::two_point(num(0, "p_lo")?, num(1, "p_hi")?, num(2, "w")?)
            }
            "beta" => {
                arity(&[2])?;
                StayProbLaw::beta(num(0, "a")?, num(1, "b")?)
            }
            "stable_tail" => {
                arity(&[2, 3])?;
                let offset = if args.len() == 3 { num(2, "offset")? } else { 0.0 };
                StayProbLaw::stable_tail_with_offset(num(0, "beta")?, num(1, "scale")?, offset)
            }
            other => Err(Error::config(
                "law",
                format!("unknown law `{other}` (constant, two_point, beta, stable_tail)"),
            )),
        }
    }
}

fn open_unit(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::config(name, format!("must satisfy p in (0,1), got {x}")))
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::config(name, format!("must be > 0, got {x}")))
    }
}

#[inline]
fn clamp_p(p: f64) -> f64 {
    p.clamp(P_FLOOR, 1.0 - P_FLOOR)
}

/// Moments of `V = p/(1-p)` under a stay-probability law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VMoments {
    pub mean: f64,
    /// `E[V^2]`, `None` when infinite.
    pub second: Option<f64>,
}

impl VMoments {
    pub fn variance(&self) -> Option<f64> {
        self.second.map(|s| s - self.mean * self.mean)
    }

    /// `E[p/(1-p)^2] = E[V(1+V)]`, the mean conditional variance of a sojourn.
    pub fn sojourn_variance_mean(&self) -> Option<f64> {
        self.second.map(|s| s + self.mean)
    }
}

impl StayProbLaw {
    pub fn constant(p: f64) -> Result<Self> {
        let law = StayProbLaw::Constant { p };
        law.validate()?;
        Ok(law)
    }

    pub fn two_point(lo: f64, hi: f64, w: f64) -> Result<Self> {
        let law = StayProbLaw::TwoPoint { lo, hi, w };
        law.validate()?;
        Ok(law)
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        let law = StayProbLaw::Beta { a, b };
        law.validate()?;
        Ok(law)
    }

    pub fn stable_tail(beta: f64, scale: f64) -> Result<Self> {
        Self::stable_tail_with_offset(beta, scale, 0.0)
    }

    pub fn stable_tail_with_offset(beta: f64, scale: f64, offset: f64) -> Result<Self> {
        let law = StayProbLaw::StableTail {
            beta,
            scale,
            offset,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StayProbLaw::Constant { p } => open_unit("p", p),
            StayProbLaw::TwoPoint { lo, hi, w } => {
                open_unit("p_lo", lo)?;
                open_unit("p_hi", hi)?;
                if lo >= hi {
                    return Err(Error::config("p_lo", format!("must be < p_hi ({lo} >= {hi})")));
                }
                open_unit("w", w)
            }
            StayProbLaw::Beta { a, b } => {
                positive("a", a)?;
                positive("b", b)
            }
            StayProbLaw::StableTail {
                beta,
                scale,
                offset,
            } => {
                if !(beta > 1.0 && beta < 2.0) {
                    return Err(Error::config("beta", format!("must lie in (1,2), got {beta}")));
                }
                positive("scale", scale)?;
                if offset.is_finite() && offset >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::config("offset", format!("must be >= 0, got {offset}")))
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, StayProbLaw::Constant { .. })
    }

    /// Draws one stay probability, clamped to `[P_FLOOR, 1 - P_FLOOR]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = match *self {
            StayProbLaw::Constant { p } => p,
            StayProbLaw::TwoPoint { lo, hi, w } => {
                if rng::closed_open_unit(rng.next_u64()) < w {
                    hi
                } else {
                    lo
                }
            }
            StayProbLaw::Beta { a, b } => Beta::new(a, b)
                .expect("validated beta parameters")
                .sample(rng),
            StayProbLaw::StableTail {
                beta,
                scale,
                offset,
            } => {
                let u = rng::open_closed_unit(rng.next_u64());
                let v = scale * (u.powf(-1.0 / beta) - 1.0) + offset;
                v / (1.0 + v)
            }
        };
        clamp_p(p)
    }

    /// Moments of `V = p/(1-p)`; errors when `E[V]` is infinite.
    pub fn v_moments(&self) -> Result<VMoments> {
        match *self {
            StayProbLaw::Constant { p } => {
                let v = p / (1.0 - p);
                Ok(VMoments {
                    mean: v,
                    second: Some(v * v),
                })
            }
            StayProbLaw::TwoPoint { lo, hi, w } => {
                let (vl, vh) = (lo / (1.0 - lo), hi / (1.0 - hi));
                Ok(VMoments {
                    mean: (1.0 - w) * vl + w * vh,
                    second: Some((1.0 - w) * vl * vl + w * vh * vh),
                })
            }
            StayProbLaw::Beta { a, b } => {
                if b <= 1.0 {
                    return Err(Error::GammaUndefined(format!(
                        "beta({a},{b}): E[p/(1-p)] is infinite for b <= 1"
                    )));
                }
                // E[p^k (1-p)^-k] = B(a+k, b-k) / B(a, b)
                let mean = a / (b - 1.0);
                let second = (b > 2.0).then(|| a * (a + 1.0) / ((b - 1.0) * (b - 2.0)));
                Ok(VMoments { mean, second })
            }
            StayProbLaw::StableTail {
                beta,
                scale,
                offset,
            } => Ok(VMoments {
                mean: scale / (beta - 1.0) + offset,
                second: None,
            }),
        }
    }
}

/// Constants of the functional limit theorem for a stay-probability law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalConstants {
    /// Stability index of the centred `p/(1-p)`.
    pub beta: f64,
    /// Horizontal scaling exponent `1/2 + 1/(2 beta)`.
    pub delta: f64,
    /// Mean time dilation `1 + E[p/(1-p)]`.
    pub gamma: f64,
    /// Scale for alternating orientations.
    pub sigma_a: f64,
    /// Scale for i.i.d. symmetric orientations.
    pub sigma_b: f64,
    pub mean_v: f64,
}

impl TheoreticalConstants {
    /// Scale multiplying the limit process for the given orientation scheme.
    pub fn sigma_for(&self, scheme: &OrientationScheme) -> Result<f64> {
        match scheme {
            OrientationScheme::Alternating => Ok(self.sigma_a),
            OrientationScheme::IidRademacher => Ok(self.sigma_b),
            OrientationScheme::Fixed(_) => Err(Error::Domain(
                "no limit theorem for a fixed finite orientation scheme".into(),
            )),
        }
    }
}

#[inline]
pub fn scaling_exponent(beta: f64) -> f64 {
    0.5 + 0.5 / beta
}

pub fn theoretical_constants(law: &StayProbLaw) -> Result<TheoreticalConstants> {
    law.validate()?;
    let m = law.v_moments()?;
    let gamma = 1.0 + m.mean;
    let (beta, sigma_a, sigma_b) = match *law {
        StayProbLaw::StableTail { beta, .. } => (beta, 1.0, 1.0),
        StayProbLaw::Beta { b, .. } if b < 2.0 => (b, 1.0, 1.0),
        StayProbLaw::Beta { a, b } if b == 2.0 => {
            return Err(Error::Domain(format!(
                "beta({a},{b}): p/(1-p) has infinite variance but is not in a normal domain of attraction"
            )))
        }
        _ => {
            let second = m.second.expect("finite second moment for beta = 2 laws");
            let var = (second - m.mean * m.mean).max(0.0);
            (2.0, var.sqrt(), second.sqrt())
        }
    };
    Ok(TheoreticalConstants {
        beta,
        delta: scaling_exponent(beta),
        gamma,
        sigma_a,
        sigma_b,
        mean_v: m.mean,
    })
}

/// Orientation and stay probability of one horizontal layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRecord {
    pub y: i64,
    pub epsilon: Orientation,
    pub p: f64,
}

impl LevelRecord {
    /// `p/(1-p)`, the mean sojourn length on this layer.
    #[inline]
    pub fn v(&self) -> f64 {
        self.p / (1.0 - self.p)
    }
}

#[derive(Debug)]
pub struct Environment {
    scheme: OrientationScheme,
    law: StayProbLaw,
    master_seed: u64,
    cache: RwLock<HashMap<i64, LevelRecord>>,
    cache_cap: Option<usize>,
}

impl Clone for Environment {
    fn clone(&self) -> Self {
        Environment {
            scheme: self.scheme.clone(),
            law: self.law,
            master_seed: self.master_seed,
            cache: RwLock::new(self.cache.read().expect("cache lock").clone()),
            cache_cap: self.cache_cap,
        }
    }
}

pub fn make_environment(
    scheme: OrientationScheme,
    law: StayProbLaw,
    master_seed: u64,
) -> Result<Environment> {
    Environment::new(scheme, law, master_seed)
}

impl Environment {
    pub fn new(scheme: OrientationScheme, law: StayProbLaw, master_seed: u64) -> Result<Self> {
        law.validate()?;
        Ok(Environment {
            scheme,
            law,
            master_seed,
            cache: RwLock::new(HashMap::new()),
            cache_cap: None,
        })
    }

    /// Caps the number of cached records; levels beyond the cap are recomputed.
    pub fn with_cache_cap(mut self, cap: usize) -> Self {
        self.cache_cap = Some(cap);
        self
    }

    pub fn scheme(&self) -> &OrientationScheme {
        &self.scheme
    }

    pub fn law(&self) -> &StayProbLaw {
        &self.law
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn cached_levels(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    /// Record for layer `y`, served from the cache when present.
    pub fn level(&self, y: i64) -> Result<LevelRecord> {
        if let Some(rec) = self.cache.read().expect("cache lock").get(&y) {
            return Ok(*rec);
        }
        let rec = self.generate(y)?;
        let mut cache = self.cache.write().expect("cache lock");
        if self.cache_cap.is_none_or(|cap| cache.len() < cap) {
            cache.entry(y).or_insert(rec);
        }
        Ok(rec)
    }

    /// Computes the record for layer `y` without touching the cache.
    ///
    /// Word 0 of the layer stream decides the orientation, the remaining words
    /// feed the stay-probability law, so `p_y` does not depend on the scheme.
    pub fn generate(&self, y: i64) -> Result<LevelRecord> {
        let needs_stream =
            !self.law.is_constant() || matches!(self.scheme, OrientationScheme::IidRademacher);
        let mut stream = needs_stream.then(|| rng::stream(self.master_seed, Purpose::Level, rng::zigzag(y)));
        let first_word = stream.as_mut().map(|s| s.next_u64());

        let epsilon = match &self.scheme {
            OrientationScheme::Alternating => {
                if y.rem_euclid(2) == 0 {
                    Orientation::Right
                } else {
                    Orientation::Left
                }
            }
            OrientationScheme::IidRademacher => {
                if first_word.expect("stream opened for rademacher") >> 63 == 0 {
                    Orientation::Right
                } else {
                    Orientation::Left
                }
            }
            OrientationScheme::Fixed(levels) => {
                *levels.get(&y).ok_or(Error::LevelNotInScheme(y))?
            }
        };
        let p = match (stream.as_mut(), self.law) {
            (_, StayProbLaw::Constant { p }) => clamp_p(p),
            (Some(s), law) => law.sample(s),
            (None, _) => unreachable!("non-constant laws always open a stream"),
        };
        Ok(LevelRecord { y, epsilon, p })
    }
}
