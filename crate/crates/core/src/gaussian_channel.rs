//! The additive Gaussian noise channel `Y = sqrt(snr) X + Z`, `Z ~ N(0, 1)`.
//!
//! Provides seeded sampling and closed-form ground truth (density, score,
//! Fisher information, MMSE) for the two built-in input laws: standard
//! Gaussian and equiprobable ±1.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::kernel_density::SampleSet;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const GAUSS_HERMITE_NODES: usize = 61;

type Sampler = dyn Fn(&mut dyn RngCore) -> std::result::Result<f64, String> + Send + Sync;

/// Input law supplied by the caller: a sampler plus a name for provenance.
#[derive(Clone)]
pub struct CustomInput {
    pub name: String,
    pub sampler: Arc<Sampler>,
}

impl fmt::Debug for CustomInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomInput").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum InputLaw {
    GaussianStd,
    /// `X = ±1` with probability 1/2 each.
    BinaryPm1,
    Custom(CustomInput),
}

impl InputLaw {
    pub fn name(&self) -> &str {
        match self {
            InputLaw::GaussianStd => "gaussian",
            InputLaw::BinaryPm1 => "binary",
            InputLaw::Custom(c) => &c.name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InputName {
    Gaussian,
    Binary,
    Custom,
}

/// Serialized form of a [`ChannelModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSpec {
    input: InputName,
    snr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    second_moment: Option<f64>,
}

/// Channel `Y = sqrt(snr) X + Z` with the input moments the bounds need.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ChannelSpec", into = "ChannelSpec")]
pub struct ChannelModel {
    pub input: InputLaw,
    pub snr: f64,
    /// Sub-Gaussian proxy of `|X|`, when known.
    pub alpha: Option<f64>,
    pub variance: f64,
    pub second_moment: f64,
}

impl From<ChannelModel> for ChannelSpec {
    fn from(m: ChannelModel) -> Self {
        let input = match m.input {
            InputLaw::GaussianStd => InputName::Gaussian,
            InputLaw::BinaryPm1 => InputName::Binary,
            InputLaw::Custom(_) => InputName::Custom,
        };
        ChannelSpec {
            input,
            snr: m.snr,
            alpha: m.alpha,
            variance: Some(m.variance),
            second_moment: Some(m.second_moment),
        }
    }
}

impl TryFrom<ChannelSpec> for ChannelModel {
    type Error = Error;

    fn try_from(spec: ChannelSpec) -> Result<Self> {
        let model = match spec.input {
            InputName::Gaussian => ChannelModel::gaussian(spec.snr),
            InputName::Binary => ChannelModel::binary(spec.snr),
            InputName::Custom => {
                return Err(Error::Config("custom input laws cannot be loaded from a config file".into()))
            }
        };
        let check = |name: &str, given: Option<f64>, expected: f64| match given {
            Some(v) if (v - expected).abs() > 1e-12 => Err(Error::Config(format!(
                "{name} = {v} contradicts the {} input law ({expected})",
                model.input.name()
            ))),
            _ => Ok(()),
        };
        check("alpha", spec.alpha, 1.0)?;
        check("variance", spec.variance, model.variance)?;
        check("second_moment", spec.second_moment, model.second_moment)?;
        model.validate()?;
        Ok(model)
    }
}

impl ChannelModel {
    /// Standard Gaussian input: `Var(X) = E[X²] = 1`, sub-Gaussian with `α = 1`.
    pub fn gaussian(snr: f64) -> Self {
        Self { input: InputLaw::GaussianStd, snr, alpha: Some(1.0), variance: 1.0, second_moment: 1.0 }
    }

    /// Equiprobable ±1 input: `Var(X) = E[X²] = 1`, sub-Gaussian with `α = 1`.
    pub fn binary(snr: f64) -> Self {
        Self { input: InputLaw::BinaryPm1, snr, alpha: Some(1.0), variance: 1.0, second_moment: 1.0 }
    }

    pub fn custom(
        name: impl Into<String>,
        snr: f64,
        variance: f64,
        second_moment: f64,
        alpha: Option<f64>,
        sampler: impl Fn(&mut dyn RngCore) -> std::result::Result<f64, String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            input: InputLaw::Custom(CustomInput { name: name.into(), sampler: Arc::new(sampler) }),
            snr,
            alpha,
            variance,
            second_moment,
        }
    }

    pub fn with_snr(&self, snr: f64) -> Self {
        Self { snr, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(Error::invalid(format!("snr must be positive and finite, got {}", self.snr)));
        }
        if !(self.variance >= 0.0 && self.second_moment >= self.variance) {
            return Err(Error::invalid("moments must satisfy 0 <= Var(X) <= E[X²]"));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) {
                return Err(Error::invalid("sub-Gaussian proxy must be positive"));
            }
        }
        Ok(())
    }

    fn draw_input(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match &self.input {
            InputLaw::GaussianStd => Ok(rng.sample(StandardNormal)),
            InputLaw::BinaryPm1 => Ok(if rng.random::<bool>() { 1.0 } else { -1.0 }),
            InputLaw::Custom(c) => (c.sampler)(rng).map_err(Error::Sampler),
        }
    }

    fn describe(&self) -> String {
        format!("channel(input={}, snr={})", self.input.name(), self.snr)
    }
}

/// Generator for trial `trial` of series `stream` under master seed `seed`.
///
/// The key is `seed XOR trial`; independent series (sample sizes, snr points)
/// use distinct ChaCha stream ids, so every trial can be generated on its own
/// in any order.
pub fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial);
    rng.set_stream(stream);
    rng
}

/// `n` i.i.d. draws of `sqrt(snr) X + Z`, reproducible from `seed`.
pub fn sample_channel(model: &ChannelModel, n: usize, seed: u64) -> Result<SampleSet> {
    sample_channel_trial(model, n, seed, 0, 0)
}

/// Like [`sample_channel`], drawing from the stream of [`trial_rng`].
pub fn sample_channel_trial(model: &ChannelModel, n: usize, seed: u64, trial: u64, stream: u64) -> Result<SampleSet> {
    model.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = trial_rng(seed, trial, stream);
    let gain = model.snr.sqrt();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let x = model.draw_input(&mut rng)?;
        let z: f64 = rng.sample(StandardNormal);
        values.push(gain * x + z);
    }
    let source = if trial == 0 && stream == 0 {
        model.describe()
    } else {
        format!("{} trial={trial} stream={stream}", model.describe())
    };
    Ok(SampleSet::new(values)?.with_seed(seed).with_source(source))
}

fn unsupported(model: &ChannelModel) -> Error {
    Error::Unsupported(format!("no closed-form oracle for input law {:?}", model.input.name()))
}

fn normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

fn normal_cdf(t: f64) -> f64 {
    0.5 * (1.0 + erf(t / std::f64::consts::SQRT_2))
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the weight
/// `exp(-x²)`, by Newton iteration on the normalised Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PI_M4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = PI_M4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(GAUSS_HERMITE_NODES))
}

/// `E[g(Z)]` for `Z ~ N(0, 1)` with the 61-node Gauss–Hermite rule.
fn standard_normal_expectation(g: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = hermite_rule();
    let s: f64 = x.iter().zip(w).map(|(&xi, &wi)| wi * g(std::f64::consts::SQRT_2 * xi)).sum();
    s / std::f64::consts::PI.sqrt()
}

/// `mmse(X | Y) = E[(X - E[X|Y])²]`.
///
/// Binary input: `1 - E[tanh(snr - sqrt(snr) Z)]`.
pub fn true_mmse(model: &ChannelModel) -> Result<f64> {
    model.validate()?;
    let snr = model.snr;
    match model.input {
        InputLaw::GaussianStd => Ok(1.0 / (1.0 + snr)),
        InputLaw::BinaryPm1 => {
            let g = snr.sqrt();
            Ok(1.0 - standard_normal_expectation(|y| (snr - g * y).tanh()))
        }
        InputLaw::Custom(_) => Err(unsupported(model)),
    }
}

/// Fisher information of `f_Y`, via Brown's identity for the binary input.
pub fn true_fisher(model: &ChannelModel) -> Result<f64> {
    match model.input {
        InputLaw::GaussianStd => {
            model.validate()?;
            Ok(1.0 / (1.0 + model.snr))
        }
        InputLaw::BinaryPm1 => Ok(1.0 - model.snr * true_mmse(model)?),
        InputLaw::Custom(_) => Err(unsupported(model)),
    }
}

/// Conditional mean `E[X | Y = y]`.
pub fn conditional_mean(model: &ChannelModel, y: f64) -> Result<f64> {
    let s = model.snr;
    match model.input {
        InputLaw::GaussianStd => Ok(s.sqrt() * y / (1.0 + s)),
        InputLaw::BinaryPm1 => Ok((s.sqrt() * y).tanh()),
        InputLaw::Custom(_) => Err(unsupported(model)),
    }
}

pub fn true_density(model: &ChannelModel, t: f64) -> Result<f64> {
    let s = model.snr;
    match model.input {
        InputLaw::GaussianStd => {
            let sd = (1.0 + s).sqrt();
            Ok(normal_pdf(t / sd) / sd)
        }
        InputLaw::BinaryPm1 => {
            let m = s.sqrt();
            Ok(0.5 * (normal_pdf(t - m) + normal_pdf(t + m)))
        }
        InputLaw::Custom(_) => Err(unsupported(model)),
    }
}

pub fn true_density_deriv(model: &ChannelModel, t: f64) -> Result<f64> {
    let s = model.snr;
    match model.input {
        InputLaw::GaussianStd => {
            let var = 1.0 + s;
            Ok(-t / var * true_density(model, t)?)
        }
        InputLaw::BinaryPm1 => {
            let m = s.sqrt();
            Ok(-0.5 * ((t - m) * normal_pdf(t - m) + (t + m) * normal_pdf(t + m)))
        }
        InputLaw::Custom(_) => Err(unsupported(model)),
    }
}

/// Score `f_Y'/f_Y = sqrt(snr) E[X|Y=t] - t`, evaluated without dividing
/// densities so it stays accurate far in the tails.
pub fn true_score(model: &ChannelModel, t: f64) -> Result<f64> {
    Ok(model.snr.sqrt() * conditional_mean(model, t)? - t)
}

pub fn true_cdf(model: &ChannelModel, t: f64) -> Result<f64> {
    let s = model.snr;
    match model.input {
        InputLaw::GaussianStd => Ok(normal_cdf(t / (1.0 + s).sqrt())),
        InputLaw::BinaryPm1 => {
            let m = s.sqrt();
            Ok(0.5 * (normal_cdf(t - m) + normal_cdf(t + m)))
        }
        InputLaw::Custom(_) => Err(unsupported(model)),
    }
}
