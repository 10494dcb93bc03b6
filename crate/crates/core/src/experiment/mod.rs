//! Declarative experiments: a flat config in, CSV files and a JSON report out.
//!
//! Replica `i` always draws from the streams keyed by `(seed, i)` and results
//! are merged in index order, so every numeric output depends on the config
//! and seed only, never on the thread count.

mod config;
pub mod validate;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    parse_config, ExperimentConfig, ExperimentKind, Statistic, DEFAULT_CALIBRATION_N,
    DEFAULT_CHECKPOINT_SECONDS, DEFAULT_LIMIT_DRAWS, DEFAULT_QUANTILE, DEFAULT_REPLICAS,
};
pub use validate::{validate_suite, validate_suite_with, CheckResult, ValidationHooks};

use crate::env::theoretical_constants;
use crate::error::{Error, Result};
use crate::limit::{
    calibrate_a1, compare_distributions, limit_spec, rescaled_walk_sample, sample_delta,
    walk_positions,
};
use crate::rng;
use crate::stats::{
    estimate_variance, fit_exponent, return_counts, sample_x_annealed, sd_curve, spread_curve,
    variance_curve, CurvePoint, ReturnStats,
};
use crate::walk::{self, write_direct_csv};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Summary written to `report.json` next to the CSV outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config_echo: BTreeMap<String, String>,
    pub files: Vec<PathBuf>,
    pub wall_seconds: f64,
    pub total_replicas: u64,
    pub version: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn create(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.files.push(path.clone());
        Ok((path, BufWriter::new(f)))
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let (path, file) = self.create(name)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn with<T>(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<T>) -> Result<T> {
        let (path, mut file) = self.create(name)?;
        let out = f(&mut file)?;
        file.flush().map_err(|e| Error::io(path, e))?;
        Ok(out)
    }
}

fn curve_rows(points: &[CurvePoint<f64>]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| vec![p.n.to_string(), p.value.to_string(), p.se.to_string()])
        .collect()
}

fn write_curve(out: &mut Outputs<'_>, stat: &str, points: &[CurvePoint<f64>]) -> Result<()> {
    out.csv(&format!("{stat}.csv"), &["n", stat, "se"], curve_rows(points))?;
    if points.len() >= 3 {
        let fit = fit_exponent(points)?;
        out.csv(
            "exponent.csv",
            &["slope", "se", "intercept"],
            [vec![fit.slope.to_string(), fit.slope_se.to_string(), fit.intercept.to_string()]],
        )?;
    }
    Ok(())
}

/// Runs the configured experiment inside a pool of `config.threads` workers.
///
/// On failure the report is still written, with an `error` entry and the
/// files flushed so far.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let mut out = Outputs {
        dir: &config.output_dir,
        files: Vec::new(),
    };
    let result = pool.install(|| dispatch(config, &mut out));
    let mut report = RunReport {
        config_echo: config.echo(),
        files: Vec::new(),
        wall_seconds: 0.0,
        total_replicas: 0,
        version: VERSION.to_string(),
        seed: config.seed,
        checks: Vec::new(),
        error: None,
    };
    match &result {
        Ok((replicas, checks)) => {
            report.total_replicas = *replicas;
            report.checks = checks.clone();
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    let report_path = config.output_dir.join("report.json");
    out.files.push(report_path.clone());
    report.files = out.files;
    report.wall_seconds = start.elapsed().as_secs_f64();
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(&report_path, json + "\n").map_err(|e| Error::io(&report_path, e))?;
    result.map(|_| report)
}

fn dispatch(config: &ExperimentConfig, out: &mut Outputs<'_>) -> Result<(u64, Vec<CheckResult>)> {
    let c = config;
    match c.experiment {
        ExperimentKind::Simulate => simulate(c, out).map(|r| (r, Vec::new())),
        ExperimentKind::Variance => {
            let curve = estimate_variance(&c.law, &c.scheme, &c.horizons, c.replicas, c.seed, c.force)?;
            write_curve(out, "variance", &curve)?;
            Ok((c.replicas, Vec::new()))
        }
        ExperimentKind::Exponent => exponent(c, out).map(|r| (r, Vec::new())),
        ExperimentKind::Returns => returns(c, out).map(|r| (r, Vec::new())),
        ExperimentKind::Limit => limit(c, out).map(|r| (r, Vec::new())),
        ExperimentKind::Validate => {
            let checks = validate_suite(c.seed)?;
            out.csv(
                "validate.csv",
                &["check", "passed", "value", "detail"],
                checks.iter().map(|k| {
                    vec![k.name.clone(), k.passed.to_string(), k.value.to_string(), k.detail.clone()]
                }),
            )?;
            Ok((0, checks))
        }
    }
}

/// Endpoints of every replica at the last horizon, plus full path dumps of
/// replica 0 from both simulators.
fn simulate(c: &ExperimentConfig, out: &mut Outputs<'_>) -> Result<u64> {
    let n = *c.horizons.last().expect("horizons non-empty");
    let ends = walk_positions(&c.law, &c.scheme, n, c.replicas, c.seed)?;
    out.csv(
        "endpoints.csv",
        &["replica", "x", "y"],
        ends.iter()
            .enumerate()
            .map(|(i, (x, y))| vec![i.to_string(), x.to_string(), y.to_string()]),
    )?;
    let env = crate::stats::replica_environment(&c.law, &c.scheme, c.seed, 0)?;
    let direct = walk::simulate_direct(&env, n, &mut rng::replica_stream(c.seed, 0))?;
    out.with("path_direct.csv", |w| write_direct_csv(&direct, w))?;
    let embedded = walk::simulate_embedded(&env, n, &mut rng::replica_stream(c.seed, 0))?;
    out.with("path_embedded.csv", |w| embedded.write_csv(w))?;
    Ok(c.replicas)
}

fn exponent(c: &ExperimentConfig, out: &mut Outputs<'_>) -> Result<u64> {
    let finite = theoretical_constants(&c.law).is_ok_and(|k| k.beta == 2.0);
    let stat = c
        .statistic
        .unwrap_or(if finite { Statistic::Variance } else { Statistic::Spread });
    if stat != Statistic::Spread && !finite && !c.force {
        return Err(Error::InfiniteVariance(format!("law {}", c.law)));
    }
    let samples = sample_x_annealed(&c.law, &c.scheme, &c.horizons, c.replicas, c.seed)?;
    let curve = match stat {
        Statistic::Variance => variance_curve(&c.horizons, &samples)?,
        Statistic::Sd => sd_curve(&c.horizons, &samples)?,
        Statistic::Spread => spread_curve(&c.horizons, &samples, c.quantile, c.seed)?,
    };
    write_curve(out, stat.name(), &curve)?;
    Ok(c.replicas)
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: BTreeMap<String, String>,
    counts: Vec<Vec<u64>>,
}

const CHECKPOINT_FILE: &str = "returns.checkpoint.json";

fn load_checkpoint(path: &Path, c: &ExperimentConfig) -> Vec<Vec<u64>> {
    let Ok(text) = fs::read_to_string(path) else {
        return Vec::new();
    };
    match serde_json::from_str::<Checkpoint>(&text) {
        Ok(cp) if cp.fingerprint == c.fingerprint() && cp.counts.len() as u64 <= c.replicas => cp.counts,
        _ => Vec::new(),
    }
}

fn save_checkpoint(path: &Path, c: &ExperimentConfig, counts: &[Vec<u64>]) -> Result<()> {
    let cp = Checkpoint {
        fingerprint: c.fingerprint(),
        counts: counts.to_vec(),
    };
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string(&cp)?).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Return counts, run in chunks; tallies are checkpointed every
/// `checkpoint_seconds` and a matching checkpoint is resumed from.
fn returns(c: &ExperimentConfig, out: &mut Outputs<'_>) -> Result<u64> {
    let cp_path = c.output_dir.join(CHECKPOINT_FILE);
    let mut counts = load_checkpoint(&cp_path, c);
    let chunk = (4 * c.threads as u64).max(16);
    let mut last = Instant::now();
    while (counts.len() as u64) < c.replicas {
        let lo = counts.len() as u64;
        let hi = (lo + chunk).min(c.replicas);
        match return_counts(&c.law, &c.scheme, &c.horizons, c.seed, lo..hi) {
            Ok(mut more) => counts.append(&mut more),
            Err(e) => {
                save_checkpoint(&cp_path, c, &counts)?;
                return Err(e);
            }
        }
        if last.elapsed().as_secs() >= c.checkpoint_seconds && (counts.len() as u64) < c.replicas {
            save_checkpoint(&cp_path, c, &counts)?;
            last = Instant::now();
        }
    }
    let stats = ReturnStats::from_counts(c.horizons.clone(), counts);
    out.csv(
        "returns.csv",
        &["horizon", "mean", "se"],
        (0..stats.horizons.len()).map(|h| {
            vec![
                stats.horizons[h].to_string(),
                stats.mean_returns[h].to_string(),
                stats.std_error[h].to_string(),
            ]
        }),
    )?;
    if cp_path.exists() {
        fs::remove_file(&cp_path).map_err(|e| Error::io(&cp_path, e))?;
    }
    Ok(c.replicas)
}

/// Rescaled walk at the last horizon against `limit_draws` draws of
/// `(Delta_1, B_1)`.
fn limit(c: &ExperimentConfig, out: &mut Outputs<'_>) -> Result<u64> {
    let n = *c.horizons.last().expect("horizons non-empty");
    let constants = theoretical_constants(&c.law)?;
    let a1 = if constants.beta < 2.0 {
        let a1 = calibrate_a1(&c.law, c.calibration_n, c.limit_draws, c.seed)?;
        out.csv("calibration.csv", &["beta", "a1", "n", "draws"], [vec![
            constants.beta.to_string(),
            a1.to_string(),
            c.calibration_n.to_string(),
            c.limit_draws.to_string(),
        ]])?;
        Some(a1)
    } else {
        None
    };
    let spec = limit_spec(&c.law, a1)?;
    let walk = rescaled_walk_sample(&c.law, &c.scheme, n, c.replicas, c.seed)?;
    out.csv(
        "walk_samples.csv",
        &["x", "y"],
        walk.x.iter().zip(&walk.y).map(|(x, y)| vec![x.to_string(), y.to_string()]),
    )?;
    let delta = sample_delta(1.0, &spec, c.dt_or_default(), c.bin_width_or_default(), c.limit_draws, c.seed)?;
    out.with("delta_samples.csv", |w| delta.write_csv(w))?;
    let cx = compare_distributions(&walk.x, &delta.values)?;
    out.with("comparison_x.csv", |w| cx.write_csv(w))?;
    let cy = compare_distributions(&walk.y, &delta.endpoints)?;
    out.with("comparison_y.csv", |w| cy.write_csv(w))?;
    Ok(c.replicas + c.limit_draws)
}
