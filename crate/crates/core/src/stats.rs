//! Summary statistics for Monte Carlo trials: moments, quantiles,
//! fixed-width histograms and percentile bootstrap intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for a single value.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Fixed-width histogram. Bin edges sit on integer multiples of `width`, so
/// histograms with the same width line up across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub width: f64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(xs: &[f64], width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!("histogram bin width must be positive, got {width}")));
        }
        if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("histogram needs finite values"));
        }
        let lo_idx = xs.iter().map(|x| (x / width).floor() as i64).min().unwrap();
        let hi_idx = xs.iter().map(|x| (x / width).floor() as i64).max().unwrap();
        let bins = (hi_idx - lo_idx + 1) as usize;
        let mut counts = vec![0u64; bins];
        for x in xs {
            counts[((x / width).floor() as i64 - lo_idx) as usize] += 1;
        }
        let edges = (0..=bins).map(|i| (lo_idx + i as i64) as f64 * width).collect();
        Ok(Self { width, edges, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Two-sided percentile interval plus the one-sided bounds at `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// One-sided `level` upper bound.
    pub upper_one_sided: f64,
    pub lower_one_sided: f64,
    pub level: f64,
    pub resamples: usize,
}

fn resample(xs: &[f64], rng: &mut ChaCha8Rng, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend((0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]));
}

/// Percentile bootstrap for a statistic of two independent samples.
pub fn bootstrap_two_sample(
    a: &[f64],
    b: &[f64],
    stat: impl Fn(&[f64], &[f64]) -> f64,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("bootstrap needs non-empty samples"));
    }
    if !(level > 0.0 && level < 1.0) || resamples < 2 {
        return Err(Error::invalid("bootstrap level must be in (0,1) with at least 2 resamples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ra, mut rb) = (Vec::new(), Vec::new());
    let mut draws: Vec<f64> = (0..resamples)
        .map(|_| {
            resample(a, &mut rng, &mut ra);
            resample(b, &mut rng, &mut rb);
            stat(&ra, &rb)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let tail = 1.0 - level;
    Ok(BootstrapInterval {
        estimate: stat(a, b),
        lower: quantile_sorted(&draws, tail / 2.0),
        upper: quantile_sorted(&draws, 1.0 - tail / 2.0),
        upper_one_sided: quantile_sorted(&draws, level),
        lower_one_sided: quantile_sorted(&draws, tail),
        level,
        resamples,
    })
}
