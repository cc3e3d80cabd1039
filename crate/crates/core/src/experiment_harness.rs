//! Reproducible Monte Carlo experiments driven by a JSON config.
//!
//! Four kinds are supported: density/derivative overlays, estimator-vs-snr
//! sweeps, repeated-trial histograms and sample-complexity tables. Each run
//! returns an [`ExperimentReport`]; [`write_outputs`] emits one CSV per data
//! series plus `{output_path}_report.json`.
//!
//! Trial `i` of series `s` draws from `trial_rng(seed, i, s)`, so trials can
//! run in any order and in parallel while aggregation stays in trial order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher_estimators::{
    bhattacharya, bhattacharya_and_clipped, clipped, mmse_from_fisher, ClipEnvelope, EstimatorConfig,
    DEFAULT_DENSITY_FLOOR, DEFAULT_GRID_POINTS,
};
use crate::gaussian_channel::{
    sample_channel_trial, true_density, true_density_deriv, true_fisher, true_mmse, ChannelModel,
};
use crate::kernel_density::kde_pair_on_grid;
use crate::quadrature::uniform_grid;
use crate::stats::{mean, quantile, variance, Histogram};
use crate::theory_bounds::{sample_complexity, ComplexityMethod, ComplexitySpec, EnvelopeMass, EstimatorFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DensityOverlay,
    SnrSweep,
    Histogram,
    Complexity,
}

impl ExperimentKind {
    fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::DensityOverlay => "density_overlay",
            ExperimentKind::SnrSweep => "snr_sweep",
            ExperimentKind::Histogram => "histogram",
            ExperimentKind::Complexity => "complexity",
        }
    }
}

/// A bandwidth: either fixed or `n^{n_pow}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthRule {
    Fixed(f64),
    Power { n_pow: f64 },
}

impl BandwidthRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            BandwidthRule::Fixed(a) => a,
            BandwidthRule::Power { n_pow } => (n as f64).powf(n_pow),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationName {
    LogN,
}

/// Truncation half-width: fixed or `"log_n"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruncationRule {
    Fixed(f64),
    Named(TruncationName),
}

impl TruncationRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            TruncationRule::Fixed(k) => k,
            TruncationRule::Named(TruncationName::LogN) => (n as f64).ln(),
        }
    }
}

/// Source of the clipping envelope: the channel's `sqrt(3 snr Var) + 3|t|`
/// or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipRule {
    Lemma1,
    Const(f64),
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_floor() -> f64 {
    DEFAULT_DENSITY_FLOOR
}

/// Estimator settings, possibly depending on `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorRules {
    pub a0: BandwidthRule,
    pub a1: BandwidthRule,
    pub k_n: TruncationRule,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_floor")]
    pub density_floor: f64,
    #[serde(default)]
    pub clip: Option<ClipRule>,
}

impl EstimatorRules {
    /// `a0 = a1 = n^{-1/6}`, `k_n = ln n`.
    pub fn histogram_defaults() -> Self {
        Self {
            a0: BandwidthRule::Power { n_pow: -1.0 / 6.0 },
            a1: BandwidthRule::Power { n_pow: -1.0 / 6.0 },
            k_n: TruncationRule::Named(TruncationName::LogN),
            grid_points: DEFAULT_GRID_POINTS,
            density_floor: DEFAULT_DENSITY_FLOOR,
            clip: None,
        }
    }

    pub fn resolve(&self, n: usize, channel: &ChannelModel) -> Result<EstimatorConfig> {
        let mut cfg = EstimatorConfig::new(self.a0.at(n), self.a1.at(n), self.k_n.at(n))
            .with_grid_points(self.grid_points)
            .with_density_floor(self.density_floor);
        cfg.clip_envelope = match self.clip {
            None => None,
            Some(ClipRule::Lemma1) => Some(ClipEnvelope::gaussian_channel(channel.snr, channel.variance)),
            Some(ClipRule::Const(v)) => Some(ClipEnvelope::constant(v)),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for DensityGrid {
    fn default() -> Self {
        Self { lo: -6.0, hi: 6.0, points: 601 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinWidths {
    pub estimate: f64,
    pub error: f64,
}

impl BinWidths {
    /// Widths comparable with the published histograms: coarse below
    /// `n = 5000`, fine above.
    pub fn for_n(n: usize) -> Self {
        if n < 5000 {
            Self { estimate: 0.01, error: 0.005 }
        } else {
            Self { estimate: 0.003, error: 0.002 }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramEstimator {
    #[default]
    Bhattacharya,
    Clipped,
}

fn default_eps_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn default_fixed_eps() -> f64 {
    0.5
}

fn default_fixed_p_err() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexitySettings {
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default = "default_eps_grid")]
    pub p_err_grid: Vec<f64>,
    #[serde(default = "default_fixed_eps")]
    pub fixed_eps: f64,
    #[serde(default = "default_fixed_p_err")]
    pub fixed_p_err: f64,
    #[serde(default)]
    pub method: ComplexityMethod,
    #[serde(default)]
    pub envelope_mass: EnvelopeMass,
}

impl Default for ComplexitySettings {
    fn default() -> Self {
        Self {
            eps_grid: default_eps_grid(),
            p_err_grid: default_eps_grid(),
            fixed_eps: default_fixed_eps(),
            fixed_p_err: default_fixed_p_err(),
            method: ComplexityMethod::default(),
            envelope_mass: EnvelopeMass::default(),
        }
    }
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub channel: ChannelModel,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorRules>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snr_grid: Vec<f64>,
    pub seed: u64,
    pub output_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_grid: Option<DensityGrid>,
    /// One entry per `n_list` element; defaults from [`BinWidths::for_n`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_widths: Option<Vec<BinWidths>>,
    #[serde(default)]
    pub histogram_estimator: HistogramEstimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexitySettings>,
}

impl ExperimentConfig {
    /// Reads a config file. A relative `output_path` is taken relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.output_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_path = dir.join(&cfg.output_path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.kind != ExperimentKind::Complexity && (self.n_list.is_empty() || self.n_list.contains(&0)) {
            return Err(Error::Config("n_list must be nonempty with positive entries".into()));
        }
        if self.kind == ExperimentKind::SnrSweep {
            if self.snr_grid.is_empty() {
                return Err(Error::Config("snr_grid must be nonempty for a sweep".into()));
            }
            if self.snr_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::Config("snr_grid entries must be positive".into()));
            }
        }
        if let Some(w) = &self.bin_widths {
            if w.len() != self.n_list.len() {
                return Err(Error::Config("bin_widths needs one entry per n_list element".into()));
            }
        }
        if self.kind == ExperimentKind::Histogram
            && self.histogram_estimator == HistogramEstimator::Clipped
            && self.estimator.as_ref().is_none_or(|e| e.clip.is_none())
        {
            return Err(Error::Config("clipped histograms need estimator.clip".into()));
        }
        Ok(())
    }

    fn rules(&self) -> EstimatorRules {
        self.estimator.clone().unwrap_or_else(|| match self.kind {
            ExperimentKind::DensityOverlay => EstimatorRules {
                a0: BandwidthRule::Power { n_pow: -1.0 / 8.0 },
                a1: BandwidthRule::Power { n_pow: -1.0 / 8.0 },
                ..EstimatorRules::histogram_defaults()
            },
            ExperimentKind::SnrSweep => EstimatorRules {
                a0: BandwidthRule::Fixed(0.3),
                a1: BandwidthRule::Fixed(0.3),
                k_n: TruncationRule::Fixed(10.0),
                clip: Some(ClipRule::Lemma1),
                ..EstimatorRules::histogram_defaults()
            },
            _ => EstimatorRules::histogram_defaults(),
        })
    }

    fn expect(&self, kind: ExperimentKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Config(format!("config kind is {} but {} was requested", self.kind.as_str(), kind.as_str())))
        }
    }
}

/// One realization of `f_n`, `f_n'` beside the truth on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub n: usize,
    pub a0: f64,
    pub a1: f64,
    pub grid: Vec<f64>,
    pub f_n: Vec<f64>,
    pub df_n: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub sup_err_f: f64,
    pub sup_err_df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub trial: usize,
    pub n: usize,
    pub snr: f64,
    pub bhattacharya: f64,
    pub clipped: f64,
    pub mmse_bhattacharya: f64,
    pub mmse_clipped: f64,
    pub true_fisher: f64,
    pub true_mmse: f64,
    pub clip_active_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSeries {
    pub n: usize,
    pub truth: f64,
    pub estimates: Histogram,
    pub abs_errors: Histogram,
    pub mean_abs_error: f64,
    pub median_abs_error: f64,
    pub q90_abs_error: f64,
    pub q95_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCell {
    pub eps: f64,
    pub p_err: f64,
    /// `None` when the target is infeasible within the search range.
    pub bhattacharya_log10_n: Option<f64>,
    pub clipped_log10_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityTables {
    pub vs_eps: Vec<ComplexityCell>,
    pub vs_p_err: Vec<ComplexityCell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub version: String,
    pub config: ExperimentConfig,
    /// Column labels of `per_trial_estimates`.
    pub labels: Vec<String>,
    pub truth: Vec<f64>,
    /// `per_trial_estimates[trial][column]`.
    pub per_trial_estimates: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    /// Set when `trials == 1`, where the variance is reported as 0.
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histograms: Vec<HistogramSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub density: Vec<DensityCurve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexityTables>,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig, labels: Vec<String>, truth: Vec<f64>, per_trial: Vec<Vec<f64>>) -> Self {
        let cols = labels.len();
        let column = |j: usize| per_trial.iter().map(|row| row[j]).collect::<Vec<f64>>();
        let bias = (0..cols).map(|j| mean(&column(j)) - truth[j]).collect();
        let var = (0..cols).map(|j| variance(&column(j))).collect();
        Self {
            kind: config.kind,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            labels,
            truth,
            degenerate: per_trial.len() == 1,
            per_trial_estimates: per_trial,
            bias,
            variance: var,
            histograms: Vec::new(),
            density: Vec::new(),
            sweep: Vec::new(),
            complexity: None,
        }
    }

    /// Column `j` of the per-trial matrix.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.per_trial_estimates.iter().map(|r| r[j]).collect()
    }
}

fn collect_trials<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(f).collect()
}

fn sup_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Density overlays. The curves come from trial 0; every trial contributes
/// its sup-grid errors to the per-trial matrix (truth 0).
pub fn run_density_overlay(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.expect(ExperimentKind::DensityOverlay)?;
    config.validate()?;
    let rules = config.rules();
    let g = config.density_grid.unwrap_or_default();
    if !(g.lo < g.hi) || g.points < 2 {
        return Err(Error::Config("density grid must have lo < hi and at least 2 points".into()));
    }
    let grid = uniform_grid(g.lo, g.hi, g.points);
    let ch = &config.channel;
    let f: Vec<f64> = grid.iter().map(|&t| true_density(ch, t)).collect::<Result<_>>()?;
    let df: Vec<f64> = grid.iter().map(|&t| true_density_deriv(ch, t)).collect::<Result<_>>()?;
    let curve = |n_idx: usize, trial: usize| -> Result<DensityCurve> {
        let n = config.n_list[n_idx];
        let (a0, a1) = (rules.a0.at(n), rules.a1.at(n));
        let s = sample_channel_trial(ch, n, config.seed, trial as u64, n_idx as u64)?;
        let pairs = kde_pair_on_grid(&s, a0, a1, &Default::default(), &grid)?;
        let (f_n, df_n): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        Ok(DensityCurve {
            n,
            a0,
            a1,
            sup_err_f: sup_abs_diff(&f_n, &f),
            sup_err_df: sup_abs_diff(&df_n, &df),
            grid: grid.clone(),
            f_n,
            df_n,
            f: f.clone(),
            df: df.clone(),
        })
    };
    let mut labels = Vec::new();
    for &n in &config.n_list {
        labels.push(format!("sup_err_f n={n}"));
        labels.push(format!("sup_err_df n={n}"));
    }
    let per_trial = collect_trials(config.trials, |trial| {
        let mut row = Vec::new();
        for i in 0..config.n_list.len() {
            let c = curve(i, trial)?;
            row.push(c.sup_err_f);
            row.push(c.sup_err_df);
        }
        Ok(row)
    })?;
    let truth = vec![0.0; labels.len()];
    let mut report = ExperimentReport::new(config, labels, truth, per_trial);
    report.density = (0..config.n_list.len()).map(|i| curve(i, 0)).collect::<Result<_>>()?;
    Ok(report)
}

/// Bhattacharya and clipped estimates on one shared sample per `(n, snr)`
/// point, fresh samples for each point.
pub fn run_snr_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.expect(ExperimentKind::SnrSweep)?;
    config.validate()?;
    let rules = config.rules();
    if rules.clip.is_none() {
        return Err(Error::Config("a sweep needs estimator.clip for the clipped estimator".into()));
    }
    let mut points = Vec::new();
    for (ni, &n) in config.n_list.iter().enumerate() {
        for (si, &snr) in config.snr_grid.iter().enumerate() {
            points.push((ni * config.snr_grid.len() + si, n, snr));
        }
    }
    let truths: Vec<(f64, f64)> = points
        .iter()
        .map(|&(_, _, snr)| {
            let m = config.channel.with_snr(snr);
            Ok((true_fisher(&m)?, true_mmse(&m)?))
        })
        .collect::<Result<_>>()?;
    let rows = collect_trials(config.trials, |trial| {
        points
            .iter()
            .zip(&truths)
            .map(|(&(stream, n, snr), &(tf, tm))| {
                let model = config.channel.with_snr(snr);
                let est = rules.resolve(n, &model)?;
                let s = sample_channel_trial(&model, n, config.seed, trial as u64, stream as u64)?;
                let (b, c) = bhattacharya_and_clipped(&s, &est)?;
                Ok(SweepRow {
                    trial,
                    n,
                    snr,
                    bhattacharya: b.value,
                    clipped: c.value,
                    mmse_bhattacharya: mmse_from_fisher(b.value, snr)?,
                    mmse_clipped: mmse_from_fisher(c.value, snr)?,
                    true_fisher: tf,
                    true_mmse: tm,
                    clip_active_fraction: c.clip_active_fraction,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut labels = Vec::new();
    let mut truth = Vec::new();
    for (&(_, n, snr), &(tf, tm)) in points.iter().zip(&truths) {
        for (name, t) in [("bhattacharya", tf), ("clipped", tf), ("mmse_bhattacharya", tm), ("mmse_clipped", tm)] {
            labels.push(format!("{name} n={n} snr={snr}"));
            truth.push(t);
        }
    }
    let per_trial = rows
        .iter()
        .map(|r| r.iter().flat_map(|x| [x.bhattacharya, x.clipped, x.mmse_bhattacharya, x.mmse_clipped]).collect())
        .collect();
    let mut report = ExperimentReport::new(config, labels, truth, per_trial);
    report.sweep = rows.into_iter().flatten().collect();
    Ok(report)
}

/// Repeated trials for each `n`, with histograms of the estimates and of the
/// absolute errors.
pub fn run_histogram(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.expect(ExperimentKind::Histogram)?;
    config.validate()?;
    let rules = config.rules();
    let truth_value = true_fisher(&config.channel)?;
    let configs: Vec<EstimatorConfig> =
        config.n_list.iter().map(|&n| rules.resolve(n, &config.channel)).collect::<Result<_>>()?;
    let per_trial = collect_trials(config.trials, |trial| {
        config
            .n_list
            .iter()
            .zip(&configs)
            .enumerate()
            .map(|(ni, (&n, est))| {
                let s = sample_channel_trial(&config.channel, n, config.seed, trial as u64, ni as u64)?;
                let r = match config.histogram_estimator {
                    HistogramEstimator::Bhattacharya => bhattacharya(&s, est)?,
                    HistogramEstimator::Clipped => clipped(&s, est)?,
                };
                Ok(r.value)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let labels = config.n_list.iter().map(|n| format!("{} n={n}", config.histogram_estimator.as_str())).collect();
    let truth = vec![truth_value; config.n_list.len()];
    let mut report = ExperimentReport::new(config, labels, truth, per_trial);
    for (j, &n) in config.n_list.iter().enumerate() {
        let widths = config.bin_widths.as_ref().map_or_else(|| BinWidths::for_n(n), |w| w[j]);
        let est = report.column(j);
        let err: Vec<f64> = est.iter().map(|x| (x - truth_value).abs()).collect();
        report.histograms.push(HistogramSeries {
            n,
            truth: truth_value,
            estimates: Histogram::build(&est, widths.estimate)?,
            abs_errors: Histogram::build(&err, widths.error)?,
            mean_abs_error: mean(&err),
            median_abs_error: quantile(&err, 0.5),
            q90_abs_error: quantile(&err, 0.9),
            q95_abs_error: quantile(&err, 0.95),
        });
    }
    Ok(report)
}

impl HistogramEstimator {
    fn as_str(self) -> &'static str {
        match self {
            HistogramEstimator::Bhattacharya => "bhattacharya",
            HistogramEstimator::Clipped => "clipped",
        }
    }
}

/// Sample-complexity tables over an eps grid (fixed `p_err`) and a `p_err`
/// grid (fixed eps). Infeasible cells are recorded as `None`.
pub fn run_complexity(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.expect(ExperimentKind::Complexity)?;
    config.validate()?;
    let settings = config.complexity.clone().unwrap_or_default();
    let spec = ComplexitySpec {
        method: settings.method,
        envelope_mass: settings.envelope_mass,
        ..ComplexitySpec::for_channel(&config.channel)
    };
    let cell = |eps: f64, p_err: f64| -> Result<ComplexityCell> {
        let solve = |family| match sample_complexity(eps, p_err, family, &spec) {
            Ok(r) => Ok(Some(r.log10_n)),
            Err(Error::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(ComplexityCell {
            eps,
            p_err,
            bhattacharya_log10_n: solve(EstimatorFamily::Bhattacharya)?,
            clipped_log10_n: solve(EstimatorFamily::Clipped)?,
        })
    };
    let vs_eps = settings.eps_grid.iter().map(|&e| cell(e, settings.fixed_p_err)).collect::<Result<_>>()?;
    let vs_p_err = settings.p_err_grid.iter().map(|&p| cell(settings.fixed_eps, p)).collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(config, Vec::new(), Vec::new(), Vec::new());
    report.degenerate = false;
    report.complexity = Some(ComplexityTables { vs_eps, vs_p_err });
    Ok(report)
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.kind {
        ExperimentKind::DensityOverlay => run_density_overlay(config),
        ExperimentKind::SnrSweep => run_snr_sweep(config),
        ExperimentKind::Histogram => run_histogram(config),
        ExperimentKind::Complexity => run_complexity(config),
    }
}

fn output_file(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    base.with_file_name(name)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "infeasible".to_string(), |v| v.to_string())
}

/// CSV bodies keyed by file suffix, each starting with a `#` column comment.
pub fn render_csv(report: &ExperimentReport) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match report.kind {
        ExperimentKind::DensityOverlay => {
            for c in &report.density {
                let mut s = String::from("# t,f_n,df_n,f,df\n");
                for i in 0..c.grid.len() {
                    let _ = writeln!(s, "{},{},{},{},{}", c.grid[i], c.f_n[i], c.df_n[i], c.f[i], c.df[i]);
                }
                out.push((format!("_density_n{}.csv", c.n), s));
            }
        }
        ExperimentKind::SnrSweep => {
            let mut s = String::from(
                "# trial,n,snr,bhattacharya,clipped,mmse_bhattacharya,mmse_clipped,true_fisher,true_mmse,clip_active_fraction\n",
            );
            for r in &report.sweep {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.trial,
                    r.n,
                    r.snr,
                    r.bhattacharya,
                    r.clipped,
                    r.mmse_bhattacharya,
                    r.mmse_clipped,
                    r.true_fisher,
                    r.true_mmse,
                    r.clip_active_fraction
                );
            }
            out.push(("_sweep.csv".into(), s));
        }
        ExperimentKind::Histogram => {
            let mut est = String::from("# trial,n,estimate,error\n");
            for (trial, row) in report.per_trial_estimates.iter().enumerate() {
                for (j, h) in report.histograms.iter().enumerate() {
                    let _ = writeln!(est, "{},{},{},{}", trial, h.n, row[j], row[j] - h.truth);
                }
            }
            out.push(("_estimates.csv".into(), est));
            let mut hist = String::from("# n,series,bin_lo,bin_hi,count\n");
            for h in &report.histograms {
                for (series, hh) in [("estimate", &h.estimates), ("abs_error", &h.abs_errors)] {
                    for (i, c) in hh.counts.iter().enumerate() {
                        let _ = writeln!(hist, "{},{},{},{},{}", h.n, series, hh.edges[i], hh.edges[i + 1], c);
                    }
                }
            }
            out.push(("_hist.csv".into(), hist));
        }
        ExperimentKind::Complexity => {
            if let Some(t) = &report.complexity {
                for (suffix, cells) in [("_complexity_eps.csv", &t.vs_eps), ("_complexity_perr.csv", &t.vs_p_err)] {
                    let mut s = String::from("# eps,p_err,bhattacharya_log10_n,clipped_log10_n\n");
                    for c in cells.iter() {
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            c.eps,
                            c.p_err,
                            opt(c.bhattacharya_log10_n),
                            opt(c.clipped_log10_n)
                        );
                    }
                    out.push((suffix.into(), s));
                }
            }
        }
    }
    out
}

/// Writes every CSV series and `{output_path}_report.json`; returns the
/// paths written.
pub fn write_outputs(report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let base = &report.config.output_path;
    if let Some(dir) = base.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut written = Vec::new();
    for (suffix, body) in render_csv(report) {
        let p = output_file(base, &suffix);
        fs::write(&p, body)?;
        written.push(p);
    }
    let p = output_file(base, "_report.json");
    fs::write(&p, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(p);
    Ok(written)
}
