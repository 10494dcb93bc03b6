//! Sample statistics shared by the experiment estimators.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, CompensatedSum, Real};

/// One point of a scale-vs-horizon curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<F> {
    pub n: u64,
    pub value: F,
    pub se: F,
}

pub fn mean<F: Real>(xs: &[F]) -> F {
    compensated_sum(xs.iter().copied()) / F::from_count(xs.len() as u64)
}

/// Unbiased sample variance (two-pass, compensated).
pub fn sample_variance<F: Real>(xs: &[F]) -> F {
    let m = mean(xs);
    compensated_sum(xs.iter().map(|&x| (x - m) * (x - m))) / F::from_count(xs.len() as u64 - 1)
}

/// Standard error of the mean.
pub fn mean_se<F: Real>(xs: &[F]) -> F {
    (sample_variance(xs) / F::from_count(xs.len() as u64)).sqrt()
}

/// Sample variance with a delete-one-block jackknife standard error.
///
/// Replicas are split into `blocks` contiguous groups (fewer when there are
/// fewer replicas). Returns `(variance, se, leave_one_block_out_variances)`.
pub fn jackknife_variance<F: Real>(xs: &[F], blocks: usize) -> Result<(F, F, Vec<F>)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Domain(format!("variance needs at least 2 replicas, got {n}")));
    }
    let b = blocks.clamp(2, n);
    let centre = mean(xs);
    let mut sums = Vec::with_capacity(b);
    for i in 0..b {
        let (lo, hi) = (i * n / b, (i + 1) * n / b);
        let mut s1 = CompensatedSum::new();
        let mut s2 = CompensatedSum::new();
        for &x in &xs[lo..hi] {
            let d = x - centre;
            s1.add(d);
            s2.add(d * d);
        }
        sums.push((hi - lo, s1.value(), s2.value()));
    }
    let total1 = compensated_sum(sums.iter().map(|s| s.1));
    let total2 = compensated_sum(sums.iter().map(|s| s.2));
    let var_of = |count: usize, s1: F, s2: F| {
        let c = F::from_count(count as u64);
        (s2 - s1 * s1 / c) / (c - F::one())
    };
    let full = var_of(n, total1, total2);
    let leave_out: Vec<F> = sums
        .iter()
        .map(|&(c, s1, s2)| var_of(n - c, total1 - s1, total2 - s2))
        .collect();
    let se = jackknife_se(&leave_out);
    Ok((full, se, leave_out))
}

/// Jackknife standard error from leave-one-out replicates of a statistic.
pub fn jackknife_se<F: Real>(replicates: &[F]) -> F {
    let b = F::from_count(replicates.len() as u64);
    let m = mean(replicates);
    let ss = compensated_sum(replicates.iter().map(|&r| (r - m) * (r - m)));
    ((b - F::one()) / b * ss).sqrt()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted<F: Real>(sorted: &[F], q: F) -> F {
    let n = sorted.len();
    let h = (F::from_count(n as u64 - 1) * q).max(F::zero());
    let lo = h.floor().to_usize().expect("finite index").min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - F::from_count(lo as u64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Same as [`quantile_sorted`] but on unsorted data, reordering it in place.
pub fn quantile_select<F: Real>(data: &mut [F], q: F) -> F {
    let n = data.len();
    let h = (F::from_count(n as u64 - 1) * q).max(F::zero());
    let lo = h.floor().to_usize().expect("finite index").min(n - 1);
    let frac = h - F::from_count(lo as u64);
    let cmp = |a: &F, b: &F| a.partial_cmp(b).expect("no NaN in samples");
    let (_, &mut at_lo, right) = data.select_nth_unstable_by(lo, cmp);
    if frac == F::zero() || right.is_empty() {
        return at_lo;
    }
    let next = right.iter().copied().fold(F::infinity(), F::min);
    at_lo + (next - at_lo) * frac
}

/// Width of the central `[q, 1-q]` quantile range.
pub fn central_spread<F: Real>(data: &mut [F], q: F) -> F {
    let upper = quantile_select(data, F::one() - q);
    let lower = quantile_select(data, q);
    upper - lower
}

/// Central spread with a nonparametric bootstrap standard error.
pub fn spread_with_bootstrap<F: Real, R: RngCore>(
    data: &[F],
    q: F,
    resamples: usize,
    rng: &mut R,
) -> Result<(F, F)> {
    if !(q > F::zero() && q < F::lit(0.5)) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 0.5), got {q}")));
    }
    if data.is_empty() {
        return Err(Error::Domain("spread of an empty sample".into()));
    }
    let spread = central_spread(&mut data.to_vec(), q);
    let mut buf = vec![F::zero(); data.len()];
    let reps: Vec<F> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = data[rng.random_range(0..data.len())];
            }
            central_spread(&mut buf, q)
        })
        .collect();
    Ok((spread, sample_variance(&reps).sqrt()))
}

/// Ordinary least squares fit of `log(value)` on `log(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingEstimate<F> {
    pub points: Vec<CurvePoint<F>>,
    pub slope: F,
    pub slope_se: F,
    pub intercept: F,
}

pub fn fit_exponent<F: Real>(points: &[CurvePoint<F>]) -> Result<ScalingEstimate<F>> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "exponent fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(Error::Domain("horizons must be strictly increasing".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.value > F::zero())) {
        return Err(Error::Domain(format!(
            "statistic must be positive, got {} at n = {}",
            p.value, p.n
        )));
    }
    let xs: Vec<F> = points.iter().map(|p| F::from_count(p.n).ln()).collect();
    let ys: Vec<F> = points.iter().map(|p| p.value.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx = compensated_sum(xs.iter().map(|&x| (x - mx) * (x - mx)));
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = compensated_sum(
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (y - intercept - slope * x).powi(2)),
    );
    let dof = F::from_count(points.len() as u64 - 2);
    let slope_se = (sse / dof / sxx).sqrt();
    Ok(ScalingEstimate {
        points: points.to_vec(),
        slope,
        slope_se,
        intercept,
    })
}
