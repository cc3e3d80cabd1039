//! Plug-in estimators of the Fisher information for location.
//!
//! Both estimators integrate over `[-k_n, k_n]` with composite Simpson on
//! `grid_points` nodes:
//!
//! - Bhattacharya: `∫ f_n'(t)² / f_n(t) dt`
//! - clipped: `∫ min(|ρ_n(t)|, |ρ̄(t)|) |f_n'(t)| dt`, where `ρ_n = f_n'/f_n`
//!   and `ρ̄` is a known envelope of the true score.
//!
//! The MMSE estimators follow from Brown's identity `I = 1 - snr · mmse`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_density::{kde_pair_at, kde_pair_on_grid, KernelSpec, SampleSet};
use crate::quadrature::{simpson_sum, uniform_grid, validate_grid};

pub const DEFAULT_GRID_POINTS: usize = 2001;
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-30;

/// A user-supplied score envelope `t -> ρ̄(t)`.
#[derive(Clone)]
pub struct CustomEnvelope(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for CustomEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomEnvelope(..)")
    }
}

/// Known bound `|ρ(t)| <= |ρ̄(t)|` on the true score function.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClipEnvelope {
    /// `ρ̄(t) = intercept + slope · |t|`.
    Affine { intercept: f64, slope: f64 },
    #[serde(skip)]
    Custom(CustomEnvelope),
}

impl ClipEnvelope {
    /// Envelope for `Y = sqrt(snr) X + Z`: `sqrt(3 snr Var(X)) + 3|t|`.
    pub fn gaussian_channel(snr: f64, variance: f64) -> Self {
        ClipEnvelope::Affine { intercept: (3.0 * snr * variance).sqrt(), slope: 3.0 }
    }

    pub fn constant(value: f64) -> Self {
        ClipEnvelope::Affine { intercept: value, slope: 0.0 }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ClipEnvelope::Custom(CustomEnvelope(Arc::new(f)))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ClipEnvelope::Affine { intercept, slope } => intercept + slope * t.abs(),
            ClipEnvelope::Custom(CustomEnvelope(f)) => f(t),
        }
    }
}

/// Tuning of the plug-in estimators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Density bandwidth.
    pub a0: f64,
    /// Derivative bandwidth.
    pub a1: f64,
    /// Half-width of the integration interval.
    pub k_n: f64,
    pub grid_points: usize,
    /// Lower floor applied to `f_n` in denominators.
    pub density_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_envelope: Option<ClipEnvelope>,
    #[serde(default)]
    pub kernel: KernelSpec,
}

impl EstimatorConfig {
    pub fn new(a0: f64, a1: f64, k_n: f64) -> Self {
        Self {
            a0,
            a1,
            k_n,
            grid_points: DEFAULT_GRID_POINTS,
            density_floor: DEFAULT_DENSITY_FLOOR,
            clip_envelope: None,
            kernel: KernelSpec::gaussian(),
        }
    }

    /// `a0 = a1 = n^{-1/6}` and `k_n = ln n`, the setting of the repeated-trial
    /// experiments.
    pub fn for_sample_size(n: usize) -> Self {
        let a = (n as f64).powf(-1.0 / 6.0);
        Self::new(a, a, (n as f64).ln())
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }

    pub fn with_density_floor(mut self, floor: f64) -> Self {
        self.density_floor = floor;
        self
    }

    pub fn with_clip_envelope(mut self, envelope: ClipEnvelope) -> Self {
        self.clip_envelope = Some(envelope);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a0", self.a0), ("a1", self.a1), ("k_n", self.k_n)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.density_floor >= 0.0 && self.density_floor.is_finite()) {
            return Err(Error::invalid("density_floor must be nonnegative and finite"));
        }
        self.kernel.validate()?;
        validate_grid(-self.k_n, self.k_n, self.grid_points)
    }

    fn nodes(&self) -> Vec<f64> {
        uniform_grid(-self.k_n, self.k_n, self.grid_points)
    }

    fn spacing(&self) -> f64 {
        2.0 * self.k_n / (self.grid_points - 1) as f64
    }
}

/// Bandwidth `n^{-1/8}` used for the density overlays.
pub fn density_plot_bandwidth(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 8.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Bhattacharya,
    Clipped,
    MmseBhattacharya,
    MmseClipped,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EstimatorKind::Bhattacharya => "bhattacharya",
            EstimatorKind::Clipped => "clipped",
            EstimatorKind::MmseBhattacharya => "mmse_bhattacharya",
            EstimatorKind::MmseClipped => "mmse_clipped",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub estimator: EstimatorKind,
    pub config: EstimatorConfig,
    /// Fraction of grid nodes where the envelope bound replaced `|ρ_n|`.
    pub clip_active_fraction: f64,
    /// Fraction of grid nodes where `f_n` fell below the density floor.
    pub floored_fraction: f64,
}

/// `ρ_n(t) = f_n'(t) / max(f_n(t), floor)`.
pub fn score_at(samples: &SampleSet, config: &EstimatorConfig, t: f64) -> Result<f64> {
    config.validate()?;
    let (f, df) = kde_pair_at(samples, config.a0, config.a1, &config.kernel, t)?;
    let denom = f.max(config.density_floor);
    if denom == 0.0 {
        return Err(Error::DivisionGuard { t });
    }
    Ok(df / denom)
}

/// The Bhattacharya estimator `∫_{|t|<=k_n} f_n'² / f_n`.
pub fn bhattacharya(samples: &SampleSet, config: &EstimatorConfig) -> Result<EstimateResult> {
    config.validate()?;
    let nodes = config.nodes();
    let pairs = kde_pair_on_grid(samples, config.a0, config.a1, &config.kernel, &nodes)?;
    bhattacharya_on_pairs(&pairs, &nodes, config)
}

/// The clipped estimator `∫ min(|ρ_n|, |ρ̄|) |f_n'|`.
///
/// Where `|ρ_n| <= |ρ̄|` the integrand is evaluated as `f_n'² / f_n`, exactly
/// as in [`bhattacharya`], so the two estimates coincide bit-for-bit when the
/// clip never fires.
pub fn clipped(samples: &SampleSet, config: &EstimatorConfig) -> Result<EstimateResult> {
    config.validate()?;
    let envelope = envelope_of(config)?;
    let nodes = config.nodes();
    let pairs = kde_pair_on_grid(samples, config.a0, config.a1, &config.kernel, &nodes)?;
    clipped_on_pairs(&pairs, &nodes, config, envelope)
}

/// Both estimators from one pass of kernel evaluations.
pub fn bhattacharya_and_clipped(
    samples: &SampleSet,
    config: &EstimatorConfig,
) -> Result<(EstimateResult, EstimateResult)> {
    config.validate()?;
    let envelope = envelope_of(config)?;
    let nodes = config.nodes();
    let pairs = kde_pair_on_grid(samples, config.a0, config.a1, &config.kernel, &nodes)?;
    Ok((bhattacharya_on_pairs(&pairs, &nodes, config)?, clipped_on_pairs(&pairs, &nodes, config, envelope)?))
}

fn envelope_of(config: &EstimatorConfig) -> Result<&ClipEnvelope> {
    config.clip_envelope.as_ref().ok_or_else(|| Error::invalid("the clipped estimator needs a clip envelope"))
}

fn bhattacharya_on_pairs(pairs: &[(f64, f64)], nodes: &[f64], config: &EstimatorConfig) -> Result<EstimateResult> {
    let floor = config.density_floor;
    let mut floored = 0usize;
    let mut values = Vec::with_capacity(nodes.len());
    for (&(f, df), &t) in pairs.iter().zip(nodes) {
        if f < floor {
            floored += 1;
        }
        let denom = f.max(floor);
        if denom == 0.0 {
            return Err(Error::DivisionGuard { t });
        }
        values.push(df * df / denom);
    }
    let value = simpson_sum(&values, nodes, config.spacing())?;
    Ok(EstimateResult {
        value,
        estimator: EstimatorKind::Bhattacharya,
        config: config.clone(),
        clip_active_fraction: 0.0,
        floored_fraction: floored as f64 / nodes.len() as f64,
    })
}

fn clipped_on_pairs(
    pairs: &[(f64, f64)],
    nodes: &[f64],
    config: &EstimatorConfig,
    envelope: &ClipEnvelope,
) -> Result<EstimateResult> {
    let floor = config.density_floor;
    let (mut floored, mut clipped) = (0usize, 0usize);
    let mut values = Vec::with_capacity(nodes.len());
    for (&(f, df), &t) in pairs.iter().zip(nodes) {
        let bound = envelope.eval(t).abs();
        if !bound.is_finite() {
            return Err(Error::invalid(format!("clip envelope is not finite at t = {t}")));
        }
        if f < floor {
            floored += 1;
        }
        let denom = f.max(floor);
        let v = if df == 0.0 {
            0.0
        } else if denom > 0.0 && (df / denom).abs() <= bound {
            df * df / denom
        } else {
            clipped += 1;
            bound * df.abs()
        };
        values.push(v);
    }
    let value = simpson_sum(&values, nodes, config.spacing())?;
    let m = nodes.len() as f64;
    Ok(EstimateResult {
        value,
        estimator: EstimatorKind::Clipped,
        config: config.clone(),
        clip_active_fraction: clipped as f64 / m,
        floored_fraction: floored as f64 / m,
    })
}

/// Brown's identity: `mmse = (1 - I) / snr`.
pub fn mmse_from_fisher(fisher: f64, snr: f64) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::invalid(format!("snr must be positive and finite, got {snr}")));
    }
    Ok((1.0 - fisher) / snr)
}

/// MMSE estimate built on the Bhattacharya estimator.
pub fn mmse_bhattacharya(samples: &SampleSet, config: &EstimatorConfig, snr: f64) -> Result<EstimateResult> {
    mmse_from_fisher(0.0, snr)?;
    let mut r = bhattacharya(samples, config)?;
    r.value = mmse_from_fisher(r.value, snr)?;
    r.estimator = EstimatorKind::MmseBhattacharya;
    Ok(r)
}

/// MMSE estimate built on the clipped estimator.
pub fn mmse_clipped(samples: &SampleSet, config: &EstimatorConfig, snr: f64) -> Result<EstimateResult> {
    mmse_from_fisher(0.0, snr)?;
    let mut r = clipped(samples, config)?;
    r.value = mmse_from_fisher(r.value, snr)?;
    r.estimator = EstimatorKind::MmseClipped;
    Ok(r)
}
