use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::env::{OrientationScheme, StayProbLaw};
use crate::error::{Error, Result};

pub const DEFAULT_REPLICAS: u64 = 10_000;
pub const DEFAULT_LIMIT_DRAWS: u64 = 5_000;
pub const DEFAULT_QUANTILE: f64 = 0.25;
pub const DEFAULT_CALIBRATION_N: u64 = 10_000;
pub const DEFAULT_CHECKPOINT_SECONDS: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Simulate,
    Variance,
    Exponent,
    Returns,
    Limit,
    Validate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Variance => "variance",
            ExperimentKind::Exponent => "exponent",
            ExperimentKind::Returns => "returns",
            ExperimentKind::Limit => "limit",
            ExperimentKind::Validate => "validate",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "simulate" => ExperimentKind::Simulate,
            "variance" => ExperimentKind::Variance,
            "exponent" => ExperimentKind::Exponent,
            "returns" => ExperimentKind::Returns,
            "limit" => ExperimentKind::Limit,
            "validate" => ExperimentKind::Validate,
            other => {
                return Err(format!(
                    "unknown experiment `{other}` (simulate, variance, exponent, returns, limit, validate)"
                ))
            }
        })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scale statistic fitted by the `exponent` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Variance,
    Sd,
    Spread,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Variance => "variance",
            Statistic::Sd => "sd",
            Statistic::Spread => "spread",
        }
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "variance" => Ok(Statistic::Variance),
            "sd" => Ok(Statistic::Sd),
            "spread" => Ok(Statistic::Spread),
            other => Err(format!("unknown statistic `{other}` (variance, sd, spread)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub scheme: OrientationScheme,
    pub law: StayProbLaw,
    pub horizons: Vec<u64>,
    pub replicas: u64,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
    /// Euler step for the limit process; `1e-4` when unset.
    pub dt: Option<f64>,
    /// Local-time bin width; `0.02` when unset.
    pub bin_width: Option<f64>,
    pub limit_draws: u64,
    pub quantile: f64,
    /// Run variance estimates even when `p/(1-p)` has infinite variance.
    pub force: bool,
    /// `None` picks variance for finite-variance laws and spread otherwise.
    pub statistic: Option<Statistic>,
    /// Sum length used to calibrate the stable scale when `beta < 2`.
    pub calibration_n: u64,
    pub checkpoint_seconds: u64,
}

const KEYS: [&str; 16] = [
    "experiment",
    "scheme",
    "law",
    "horizons",
    "replicas",
    "seed",
    "threads",
    "output_dir",
    "dt",
    "bin_width",
    "limit_draws",
    "quantile",
    "force",
    "statistic",
    "calibration_n",
    "checkpoint_seconds",
];

fn available_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses the flat `key = value` format. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::ConfigLine {
                line,
                key: content.to_string(),
                reason: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::ConfigLine {
                line,
                key: key.to_string(),
                reason: "unknown key".into(),
            });
        }
        if let Some((first, _)) = entries.insert(key, (line, value)) {
            return Err(Error::ConfigLine {
                line,
                key: key.to_string(),
                reason: format!("duplicate key (first set on line {first})"),
            });
        }
    }

    fn field<T>(
        entries: &BTreeMap<&str, (usize, &str)>,
        key: &str,
        parse: impl FnOnce(&str) -> std::result::Result<T, String>,
    ) -> Result<Option<T>> {
        match entries.get(key) {
            None => Ok(None),
            Some(&(line, value)) => parse(value).map(Some).map_err(|reason| Error::ConfigLine {
                line,
                key: key.to_string(),
                reason,
            }),
        }
    }
    fn via_fromstr<T: FromStr<Err = Error>>(v: &str) -> std::result::Result<T, String> {
        v.parse().map_err(|e: Error| e.to_string())
    }
    let int = |v: &str| v.replace('_', "").parse::<u64>().map_err(|e| format!("`{v}`: {e}"));
    let real = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));

    let experiment = field(&entries, "experiment", |v| v.parse())?
        .ok_or_else(|| Error::MissingKey("experiment".into()))?;
    let needs_walk = experiment != ExperimentKind::Validate;
    let required = |key: &str| Error::MissingKey(key.to_string());

    let scheme = field(&entries, "scheme", via_fromstr)?;
    let law = field(&entries, "law", via_fromstr)?;
    let horizons = field(&entries, "horizons", parse_horizons)?;
    let (scheme, law, horizons) = if needs_walk {
        (
            scheme.ok_or_else(|| required("scheme"))?,
            law.ok_or_else(|| required("law"))?,
            horizons.ok_or_else(|| required("horizons"))?,
        )
    } else {
        (
            scheme.unwrap_or(OrientationScheme::Alternating),
            law.unwrap_or(StayProbLaw::Constant { p: 0.5 }),
            horizons.unwrap_or_else(|| vec![6]),
        )
    };

    let positive_int = |v: &str| -> std::result::Result<u64, String> {
        match int(v)? {
            0 => Err("must be >= 1".into()),
            n => Ok(n),
        }
    };
    let positive_real = |v: &str| -> std::result::Result<f64, String> {
        let x = real(v)?;
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(format!("must be > 0, got {x}"))
        }
    };

    let config = ExperimentConfig {
        experiment,
        scheme,
        law,
        horizons,
        replicas: field(&entries, "replicas", positive_int)?.unwrap_or(DEFAULT_REPLICAS),
        seed: field(&entries, "seed", int)?.unwrap_or(0),
        threads: field(&entries, "threads", positive_int)?
            .map(|t| t as usize)
            .unwrap_or_else(available_threads),
        output_dir: field(&entries, "output_dir", |v| Ok(PathBuf::from(v)))?
            .unwrap_or_else(|| PathBuf::from("output")),
        dt: field(&entries, "dt", positive_real)?,
        bin_width: field(&entries, "bin_width", positive_real)?,
        limit_draws: field(&entries, "limit_draws", positive_int)?.unwrap_or(DEFAULT_LIMIT_DRAWS),
        quantile: field(&entries, "quantile", |v| {
            let q = real(v)?;
            if q > 0.0 && q < 0.5 {
                Ok(q)
            } else {
                Err(format!("must lie in (0, 0.5), got {q}"))
            }
        })?
        .unwrap_or(DEFAULT_QUANTILE),
        force: field(&entries, "force", |v| v.parse::<bool>().map_err(|_| format!("expected true or false, got `{v}`")))?
            .unwrap_or(false),
        statistic: field(&entries, "statistic", |v| v.parse())?,
        calibration_n: field(&entries, "calibration_n", positive_int)?.unwrap_or(DEFAULT_CALIBRATION_N),
        checkpoint_seconds: field(&entries, "checkpoint_seconds", int)?.unwrap_or(DEFAULT_CHECKPOINT_SECONDS),
    };
    Ok(config)
}

fn parse_horizons(v: &str) -> std::result::Result<Vec<u64>, String> {
    let hs = v
        .split(',')
        .map(|h| {
            let h = h.trim().replace('_', "");
            // 1e6 style is common for horizons
            match h.parse::<u64>() {
                Ok(n) => Ok(n),
                Err(_) => match h.parse::<f64>() {
                    Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(x as u64),
                    _ => Err(format!("bad horizon `{h}`")),
                },
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if hs.is_empty() {
        return Err("horizons must be non-empty".into());
    }
    if hs.windows(2).any(|w| w[1] <= w[0]) {
        return Err("horizons must be increasing".into());
    }
    Ok(hs)
}

impl ExperimentConfig {
    /// Applies the `THREADS` environment variable, if set.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var("THREADS") {
            let t: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::config("THREADS", format!("not a thread count: `{v}`")))?;
            if t == 0 {
                return Err(Error::config("THREADS", "must be >= 1"));
            }
            self.threads = t;
        }
        Ok(self)
    }

    pub fn dt_or_default(&self) -> f64 {
        self.dt.unwrap_or(1e-4)
    }

    pub fn bin_width_or_default(&self) -> f64 {
        self.bin_width.unwrap_or(0.02)
    }

    /// Every key with its effective value.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let horizons = self
            .horizons
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("experiment", self.experiment.to_string());
        put("scheme", self.scheme.to_string());
        put("law", self.law.to_string());
        put("horizons", horizons);
        put("replicas", self.replicas.to_string());
        put("seed", self.seed.to_string());
        put("threads", self.threads.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("dt", self.dt_or_default().to_string());
        put("bin_width", self.bin_width_or_default().to_string());
        put("limit_draws", self.limit_draws.to_string());
        put("quantile", self.quantile.to_string());
        put("force", self.force.to_string());
        put(
            "statistic",
            self.statistic.map_or("auto", Statistic::name).to_string(),
        );
        put("calibration_n", self.calibration_n.to_string());
        put("checkpoint_seconds", self.checkpoint_seconds.to_string());
        m
    }

    /// The echo minus settings that cannot change numeric output.
    pub(crate) fn fingerprint(&self) -> BTreeMap<String, String> {
        let mut m = self.echo();
        for k in ["threads", "output_dir", "checkpoint_seconds"] {
            m.remove(k);
        }
        m
    }
}
