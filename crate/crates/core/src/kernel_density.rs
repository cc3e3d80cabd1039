//! Gaussian kernel estimates of a density and of its first derivative.
//!
//! With bandwidth `a` and samples `Y_1..Y_n`:
//!
//! ```text
//! f_n(t)  = 1/n Σ (1/a)  K((t - Y_i)/a)
//! f_n'(t) = 1/n Σ (1/a²) K'((t - Y_i)/a)
//! ```
//!
//! The derivative estimate carries the `1/a²` factor, so with equal
//! bandwidths it is the exact derivative of the density estimate.
//!
//! The module also holds the empirical CDF and the DKW tail that drive the
//! sup-norm concentration bound [`sup_deviation_tail`].

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `exp(-z²/2)` is exactly `0.0` in IEEE double precision beyond this radius,
/// so samples farther than `KERNEL_CUTOFF * a` contribute nothing to the sums.
const KERNEL_CUTOFF: f64 = 38.62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
}

/// Derivative order `r` of the estimated function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `r = 0`, the density itself.
    Density,
    /// `r = 1`, the first derivative.
    Derivative,
}

impl Order {
    pub fn r(self) -> i32 {
        match self {
            Order::Density => 0,
            Order::Derivative => 1,
        }
    }
}

/// Kernel together with the constants that enter the concentration bounds.
///
/// `v0`, `v1` are the total variations `∫|K^{(r+1)}|`; the bias slopes are
/// `δ_{r,a} / a`, the worst-case bias of `f_n^{(r)}` per unit bandwidth for
/// Gaussian-smoothed densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub v0: f64,
    pub v1: f64,
    pub bias_slope_0: f64,
    pub bias_slope_1: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::gaussian()
    }
}

impl KernelSpec {
    /// The standard normal kernel.
    ///
    /// `v1 = ∫|t² - 1| K(t) dt = 2 sqrt(2/(eπ))`.
    pub fn gaussian() -> Self {
        let e = std::f64::consts::E;
        let pi = std::f64::consts::PI;
        Self {
            kind: KernelKind::Gaussian,
            v0: (2.0 / pi).sqrt(),
            v1: 2.0 * (2.0 / (e * pi)).sqrt(),
            bias_slope_0: 1.0 / (2.0 * pi * e).sqrt(),
            bias_slope_1: (2.0 / e + 1.0) / (2.0 * pi).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v1 > 0.0) || !self.v0.is_finite() || !self.v1.is_finite() {
            return Err(Error::invalid("kernel total variations must be positive and finite"));
        }
        if !(self.bias_slope_0 >= 0.0 && self.bias_slope_1 >= 0.0) {
            return Err(Error::invalid("kernel bias slopes must be nonnegative"));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match self.kind {
            KernelKind::Gaussian => INV_SQRT_2PI * (-0.5 * z * z).exp(),
        }
    }

    #[inline]
    pub fn deriv(&self, z: f64) -> f64 {
        match self.kind {
            KernelKind::Gaussian => -z * self.value(z),
        }
    }

    /// `(K(z), K'(z))` with a single exponential.
    #[inline]
    pub fn value_and_deriv(&self, z: f64) -> (f64, f64) {
        match self.kind {
            KernelKind::Gaussian => {
                let k = INV_SQRT_2PI * (-0.5 * z * z).exp();
                (k, -z * k)
            }
        }
    }

    /// Radius (in bandwidth units) outside which the kernel is exactly zero in
    /// floating point.
    pub fn cutoff(&self) -> f64 {
        match self.kind {
            KernelKind::Gaussian => KERNEL_CUTOFF,
        }
    }

    pub fn total_variation(&self, order: Order) -> f64 {
        match order {
            Order::Density => self.v0,
            Order::Derivative => self.v1,
        }
    }

    /// `δ_{r,a}`.
    pub fn bias(&self, order: Order, a: f64) -> f64 {
        match order {
            Order::Density => a * self.bias_slope_0,
            Order::Derivative => a * self.bias_slope_1,
        }
    }
}

/// Real-valued i.i.d. observations plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    values: Vec<f64>,
    pub seed: Option<u64>,
    pub source: String,
    /// Column header, when the set was read from a CSV file that had one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<String>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample set is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite ({})", values[i])));
        }
        Ok(Self { values, seed: None, source: String::new(), header: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (0 for a single observation).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    /// Reads one value per line, or a single-column CSV with an optional
    /// header. Blank lines and lines starting with `#` are skipped.
    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        let mut set = Self::from_reader(file).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse { path: Some(path.to_path_buf()), line, message },
            other => other,
        })?;
        set.source = path.display().to_string();
        Ok(set)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let reader = BufReader::new(reader);
        let mut values = Vec::new();
        let mut header = None;
        let mut seen_data = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let field = line.trim();
            if field.is_empty() || field.starts_with('#') {
                continue;
            }
            let field = field.trim_end_matches(',').trim();
            if field.contains(',') {
                return Err(Error::Parse { path: None, line: idx + 1, message: "expected a single column".into() });
            }
            match field.parse::<f64>() {
                Ok(v) => {
                    values.push(v);
                    seen_data = true;
                }
                Err(_) if !seen_data && header.is_none() => header = Some(field.to_string()),
                Err(_) => {
                    return Err(Error::Parse { path: None, line: idx + 1, message: format!("not a number: {field:?}") })
                }
            }
        }
        let mut set = Self::new(values)?;
        set.header = header;
        Ok(set)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        self.to_writer(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_writer(&self, mut w: impl Write) -> Result<()> {
        if let Some(h) = &self.header {
            writeln!(w, "{h}")?;
        }
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

impl fmt::Display for SampleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SampleSet(n={}", self.len())?;
        if let Some(s) = self.seed {
            write!(f, ", seed={s}")?;
        }
        if !self.source.is_empty() {
            write!(f, ", source={}", self.source)?;
        }
        write!(f, ")")
    }
}

fn check_bandwidth(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("bandwidth must be positive and finite, got {a}")))
    }
}

/// Raw kernel sums `(Σ K(z_i), Σ K'(z_i))` with a shared bandwidth.
#[inline]
fn kernel_sums(values: &[f64], a: f64, kernel: &KernelSpec, t: f64) -> (f64, f64) {
    let reach = kernel.cutoff() * a;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for &y in values {
        let d = t - y;
        if d.abs() > reach {
            continue;
        }
        let (k, dk) = kernel.value_and_deriv(d / a);
        s0 += k;
        s1 += dk;
    }
    (s0, s1)
}

#[inline]
fn density_sum(values: &[f64], a: f64, kernel: &KernelSpec, t: f64) -> f64 {
    let reach = kernel.cutoff() * a;
    let mut s = 0.0;
    for &y in values {
        let d = t - y;
        if d.abs() <= reach {
            s += kernel.value(d / a);
        }
    }
    s
}

#[inline]
fn deriv_sum(values: &[f64], a: f64, kernel: &KernelSpec, t: f64) -> f64 {
    let reach = kernel.cutoff() * a;
    let mut s = 0.0;
    for &y in values {
        let d = t - y;
        if d.abs() <= reach {
            s += kernel.deriv(d / a);
        }
    }
    s
}

/// Density estimate `f_n(t)`.
pub fn kde_at(samples: &SampleSet, a: f64, kernel: &KernelSpec, t: f64) -> Result<f64> {
    check_bandwidth(a)?;
    let n = samples.len() as f64;
    Ok(density_sum(samples.values(), a, kernel, t) / (n * a))
}

/// Derivative estimate `f_n'(t)` (with the `1/a²` scaling).
pub fn kde_deriv_at(samples: &SampleSet, a: f64, kernel: &KernelSpec, t: f64) -> Result<f64> {
    check_bandwidth(a)?;
    let n = samples.len() as f64;
    Ok(deriv_sum(samples.values(), a, kernel, t) / (n * a * a))
}

/// `(f_n(t), f_n'(t))` with density bandwidth `a0` and derivative bandwidth `a1`.
///
/// Bit-identical to calling [`kde_at`] and [`kde_deriv_at`] separately; when
/// `a0 == a1` one exponential per sample serves both sums.
pub fn kde_pair_at(samples: &SampleSet, a0: f64, a1: f64, kernel: &KernelSpec, t: f64) -> Result<(f64, f64)> {
    check_bandwidth(a0)?;
    check_bandwidth(a1)?;
    Ok(pair_unchecked(samples, a0, a1, kernel, t))
}

#[inline]
fn pair_unchecked(samples: &SampleSet, a0: f64, a1: f64, kernel: &KernelSpec, t: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let values = samples.values();
    if a0 == a1 {
        let (s0, s1) = kernel_sums(values, a0, kernel, t);
        (s0 / (n * a0), s1 / (n * a1 * a1))
    } else {
        (density_sum(values, a0, kernel, t) / (n * a0), deriv_sum(values, a1, kernel, t) / (n * a1 * a1))
    }
}

/// Evaluates [`kde_pair_at`] at every grid point, in parallel. The output is
/// in grid order and identical to a sequential evaluation.
pub fn kde_pair_on_grid(
    samples: &SampleSet,
    a0: f64,
    a1: f64,
    kernel: &KernelSpec,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_bandwidth(a0)?;
    check_bandwidth(a1)?;
    Ok(grid.par_iter().map(|&t| pair_unchecked(samples, a0, a1, kernel, t)).collect())
}

/// Fraction of samples `<= t` (right-continuous).
pub fn empirical_cdf(samples: &SampleSet, t: f64) -> f64 {
    let below = samples.values().iter().filter(|&&y| y <= t).count();
    below as f64 / samples.len() as f64
}

/// `sup_t |F_n(t) - F(t)|` for a continuous CDF `F`, evaluated exactly at the
/// jump points of the empirical CDF.
pub fn ks_distance(samples: &SampleSet, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.values().to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = cdf(y);
            let hi = (i + 1) as f64 / n - f;
            let lo = f - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

/// Massart's sharp DKW tail `2 exp(-2 n eps²)`, clamped to 2 for `eps <= 0`.
pub fn dkw_tail(n: usize, eps: f64) -> f64 {
    if eps <= 0.0 {
        return 2.0;
    }
    2.0 * (-2.0 * n as f64 * eps * eps).exp()
}

/// Upper bound on `P[sup_t |f_n^{(r)}(t) - f^{(r)}(t)| > eps]`:
/// `2 exp(-2 n a^{2r+2} (eps - δ_{r,a})² / v_r²)`.
///
/// Requires `eps > δ_{r,a}`.
pub fn sup_deviation_tail(order: Order, n: usize, a: f64, eps: f64, kernel: &KernelSpec) -> Result<f64> {
    check_bandwidth(a)?;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let delta = kernel.bias(order, a);
    if !(eps > delta) {
        return Err(Error::hypothesis(format!(
            "eps = {eps} must exceed the bias bound delta_{{{},a}} = {delta}",
            order.r()
        )));
    }
    let v = kernel.total_variation(order);
    let scale = a.powi(2 * order.r() + 2);
    let gap = eps - delta;
    Ok(2.0 * (-2.0 * n as f64 * scale * gap * gap / (v * v)).exp())
}
