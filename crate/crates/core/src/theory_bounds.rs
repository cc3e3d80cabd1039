//! Finite-sample error bounds for the Fisher information estimators and
//! their specialisation to the Gaussian noise channel.
//!
//! The general bounds take sup-norm errors `eps0` (on `f`) and `eps1` (on
//! `f'`) plus a [`TailModel`] describing the unknown density. The Gaussian
//! channel supplies those envelopes in closed form ([`lemma1_constants`],
//! [`lemma2_tail`]); [`theorem5_precision`] and [`theorem6_precision`] are the
//! resulting rates, and [`sample_complexity`] inverts them.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gaussian_channel::ChannelModel;
use crate::kernel_density::{KernelSpec, Order};
use crate::quadrature::{integrate, uniform_grid};

pub type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const DEFAULT_MASS_GRID: usize = 2001;

/// Total variation of `K''` as used for `c2`: `sqrt(2/(e pi))`.
pub fn lemma1_v1() -> f64 {
    (2.0 / (std::f64::consts::E * std::f64::consts::PI)).sqrt()
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and >= 0, got {x}")))
    }
}

fn check_pos(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {x}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps0: f64,
    pub eps1: f64,
    pub eps_n: f64,
    pub p_err: f64,
}

impl ErrorBudget {
    pub fn new(eps0: f64, eps1: f64, eps_n: f64, p_err: f64) -> Result<Self> {
        check_pos("eps0", eps0)?;
        check_pos("eps1", eps1)?;
        check_pos("eps_n", eps_n)?;
        if !(p_err > 0.0 && p_err < 1.0) {
            return Err(Error::invalid(format!("p_err must be in (0, 1), got {p_err}")));
        }
        Ok(Self { eps0, eps1, eps_n, p_err })
    }
}

/// What the bounds need to know about the unknown density `f`.
///
/// `phi(x)` bounds `1/f` on `[-x, x]`, `rho_max(x)` bounds `|f'/f|` there,
/// `rho_bar` is the clipping envelope and `c_tail(k)` bounds the Fisher
/// information outside `[-k, k]`.
#[derive(Clone)]
pub struct TailModel {
    pub phi: Envelope,
    pub rho_bar: Envelope,
    pub rho_max: Envelope,
    pub c_tail: Envelope,
    /// `sup f`, needed by the log-based bound.
    pub f0: Option<f64>,
    pub alpha: Option<f64>,
    pub second_moment: Option<f64>,
    pub variance: Option<f64>,
}

impl fmt::Debug for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TailModel")
            .field("f0", &self.f0)
            .field("alpha", &self.alpha)
            .field("second_moment", &self.second_moment)
            .field("variance", &self.variance)
            .finish_non_exhaustive()
    }
}

impl TailModel {
    pub fn new(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho_bar: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho_max: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c_tail: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            phi: Arc::new(phi),
            rho_bar: Arc::new(rho_bar),
            rho_max: Arc::new(rho_max),
            c_tail: Arc::new(c_tail),
            f0: None,
            alpha: None,
            second_moment: None,
            variance: None,
        }
    }

    pub fn with_f0(mut self, f0: f64) -> Self {
        self.f0 = Some(f0);
        self
    }

    /// Envelopes for `Y = sqrt(snr) X + Z`: `phi` and `rho_max` from
    /// [`lemma1_constants`], `rho_bar = rho_max(|t|)`, `c_tail` from
    /// [`lemma2_tail`] and `f0 = 1/sqrt(2 pi)`.
    pub fn gaussian_channel(snr: f64, variance: f64, second_moment: f64, alpha: Option<f64>) -> Result<Self> {
        let l1 = lemma1_constants(snr, variance, second_moment)?;
        if let Some(a) = alpha {
            check_pos("alpha", a)?;
        }
        let (p, r, rb) = (l1, l1, l1);
        let search = VSearch::default();
        Ok(Self {
            phi: Arc::new(move |t| p.phi(t)),
            rho_bar: Arc::new(move |t| rb.rho_max(t.abs())),
            rho_max: Arc::new(move |k| r.rho_max(k)),
            c_tail: Arc::new(move |k| {
                lemma2_tail(k, snr, second_moment, alpha, &search).map_or(f64::INFINITY, |c| c.value)
            }),
            f0: Some(1.0 / SQRT_2PI),
            alpha,
            second_moment: Some(second_moment),
            variance: Some(variance),
        })
    }

    pub fn from_channel(model: &ChannelModel) -> Result<Self> {
        model.validate()?;
        Self::gaussian_channel(model.snr, model.variance, model.second_moment, model.alpha)
    }
}

/// Number of sign changes of a derivative on `[-k, k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCount {
    pub count: usize,
    pub tolerance: f64,
    pub k: f64,
}

impl ZeroCount {
    pub fn known(count: usize) -> Self {
        Self { count, tolerance: 0.0, k: f64::INFINITY }
    }
}

/// Counts sign changes of `deriv` across a uniform grid on `[-k, k]`.
///
/// Crossings closer than `tolerance` to the previous counted crossing are
/// merged. Zeros where the function touches without changing sign are not
/// counted.
pub fn count_derivative_zeros(
    deriv: impl Fn(f64) -> f64,
    k: f64,
    grid_points: usize,
    tolerance: f64,
) -> Result<ZeroCount> {
    if grid_points < 3 {
        return Err(Error::invalid("zero counting needs at least 3 grid points"));
    }
    check_pos("k", k)?;
    let nodes = uniform_grid(-k, k, grid_points);
    let mut count = 0;
    let mut last_crossing = f64::NEG_INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    for &t in &nodes {
        let v = deriv(t);
        if v == 0.0 || !v.is_finite() {
            continue;
        }
        if let Some((pt, pv)) = prev {
            if (pv > 0.0) != (v > 0.0) {
                let at = pt + (t - pt) * pv / (pv - v);
                if at - last_crossing > tolerance {
                    count += 1;
                    last_crossing = at;
                }
            }
        }
        prev = Some((t, v));
    }
    Ok(ZeroCount { count, tolerance, k })
}

fn check_eps(eps0: f64, eps1: f64, k: f64) -> Result<()> {
    check_nonneg("eps0", eps0)?;
    check_nonneg("eps1", eps1)?;
    check_pos("k_n", k)
}

fn phi_hypothesis(eps0: f64, phi: f64) -> Result<()> {
    if eps0 * phi < 1.0 {
        Ok(())
    } else {
        Err(Error::hypothesis(format!("eps0 * phi(k_n) = {} * {} = {} is not < 1", eps0, phi, eps0 * phi)))
    }
}

/// Error bound for the unclipped estimator:
/// `(4 eps1 k rho_max(k) + 2 eps1² k phi(k) + eps0 phi(k) I_up) / (1 - eps0 phi(k)) + c(k)`.
pub fn bhattacharya_error_bound(eps0: f64, eps1: f64, k: f64, tail: &TailModel, fisher_upper: f64) -> Result<f64> {
    check_eps(eps0, eps1, k)?;
    check_nonneg("fisher_upper", fisher_upper)?;
    let phi = (tail.phi)(k);
    phi_hypothesis(eps0, phi)?;
    let rho_max = (tail.rho_max)(k);
    let c = (tail.c_tail)(k);
    Ok((4.0 * eps1 * k * rho_max + 2.0 * eps1 * eps1 * k * phi + eps0 * phi * fisher_upper) / (1.0 - eps0 * phi) + c)
}

/// `psi(eps0, k) = max(log(f0 + eps0), log(phi(k) / (1 - eps0 phi(k))))`.
pub fn psi(eps0: f64, k: f64, tail: &TailModel) -> Result<f64> {
    let f0 = tail.f0.ok_or_else(|| Error::invalid("the log-based bound needs sup f (f0) in the tail model"))?;
    let phi = (tail.phi)(k);
    phi_hypothesis(eps0, phi)?;
    Ok((f0 + eps0).ln().max((phi / (1.0 - eps0 * phi)).ln()))
}

/// Log-based error bound using zero counts of `f'` and `f_n'`:
/// `(eps1 (4 + d_f + d_fn) + eps0 (2 + d_fn) rho_max(k)) psi(eps0, k) + c(k)`.
pub fn modified_error_bound(
    eps0: f64,
    eps1: f64,
    k: f64,
    tail: &TailModel,
    d_f: &ZeroCount,
    d_fn: &ZeroCount,
) -> Result<f64> {
    check_eps(eps0, eps1, k)?;
    let psi = psi(eps0, k, tail)?;
    let (df, dfn) = (d_f.count as f64, d_fn.count as f64);
    Ok((eps1 * (4.0 + df + dfn) + eps0 * (2.0 + dfn) * (tail.rho_max)(k)) * psi + (tail.c_tail)(k))
}

/// Which part of `[-k, k]` the score masses integrate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeMass {
    /// `∫_{-k}^{k}`.
    #[default]
    TwoSided,
    /// `∫_0^k`, half the two-sided mass for symmetric envelopes.
    OneSided,
}

/// `Φ¹ = ∫ |ρ|` and `Φ² = ∫ ρ²` over the chosen interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreMasses {
    pub m1: f64,
    pub m2: f64,
}

pub fn score_masses(rho: impl Fn(f64) -> f64, k: f64, grid_points: usize, mass: EnvelopeMass) -> Result<ScoreMasses> {
    check_pos("k_n", k)?;
    let lo = match mass {
        EnvelopeMass::TwoSided => -k,
        EnvelopeMass::OneSided => 0.0,
    };
    let m1 = integrate(|t| rho(t).abs(), lo, k, grid_points)
        .map_err(|e| Error::invalid(format!("score envelope is not finite on the interval: {e}")))?;
    let m2 = integrate(|t| rho(t).powi(2), lo, k, grid_points)
        .map_err(|e| Error::invalid(format!("score envelope is not finite on the interval: {e}")))?;
    Ok(ScoreMasses { m1, m2 })
}

/// Closed-form masses of `ρ̄(t) = c + 3|t|` on `[-k, k]`.
pub fn affine_envelope_masses(c: f64, k: f64) -> ScoreMasses {
    ScoreMasses { m1: 2.0 * c * k + 3.0 * k * k, m2: 2.0 * c * c * k + 6.0 * c * k * k + 6.0 * k.powi(3) }
}

/// `4 eps1 Φ¹_max + 2 eps0 Φ²_max + c(k)` from precomputed envelope masses.
pub fn clipped_bound_from_masses(eps0: f64, eps1: f64, max_masses: ScoreMasses, c_tail: f64) -> f64 {
    4.0 * eps1 * max_masses.m1 + 2.0 * eps0 * max_masses.m2 + c_tail
}

/// Error bound for the clipped estimator with `Φ^m_max` of `tail.rho_bar`
/// computed by Simpson quadrature on `[-k, k]`.
pub fn clipped_error_bound(eps0: f64, eps1: f64, k: f64, tail: &TailModel) -> Result<f64> {
    clipped_error_bound_with(eps0, eps1, k, tail, EnvelopeMass::TwoSided, DEFAULT_MASS_GRID)
}

pub fn clipped_error_bound_with(
    eps0: f64,
    eps1: f64,
    k: f64,
    tail: &TailModel,
    mass: EnvelopeMass,
    grid_points: usize,
) -> Result<f64> {
    check_eps(eps0, eps1, k)?;
    let m = score_masses(|t| (tail.rho_bar)(t), k, grid_points, mass)?;
    Ok(clipped_bound_from_masses(eps0, eps1, m, (tail.c_tail)(k)))
}

/// The sharper max form:
/// `max{4 eps1 Φ¹ + 2 eps0 Φ² + c, 3 eps1 Φ¹_max + eps0 Φ²_max}` with `Φ^m`
/// the masses of the true score.
pub fn clipped_max_form_bound(
    eps0: f64,
    eps1: f64,
    true_masses: ScoreMasses,
    max_masses: ScoreMasses,
    c_tail: f64,
) -> Result<f64> {
    check_nonneg("eps0", eps0)?;
    check_nonneg("eps1", eps1)?;
    let a = 4.0 * eps1 * true_masses.m1 + 2.0 * eps0 * true_masses.m2 + c_tail;
    let b = 3.0 * eps1 * max_masses.m1 + eps0 * max_masses.m2;
    Ok(a.max(b))
}

/// Upper bound on the true-score mass `Φ^m(k)`:
/// `min{(2 + d_f) ρ̄^{m-1}(k) psi(0, k), Φ^m_max(k)}`.
pub fn true_mass_bound(m: u32, k: f64, tail: &TailModel, d_f: &ZeroCount, max_mass: f64) -> Result<f64> {
    if !(m == 1 || m == 2) {
        return Err(Error::invalid(format!("mass order must be 1 or 2, got {m}")));
    }
    let psi0 = psi(0.0, k, tail)?;
    let lhs = (2.0 + d_f.count as f64) * (tail.rho_bar)(k).abs().powi(m as i32 - 1) * psi0;
    Ok(lhs.min(max_mass))
}

/// Gaussian-kernel, Gaussian-channel constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Constants {
    pub snr: f64,
    pub variance: f64,
    pub second_moment: f64,
    pub bias_slope_0: f64,
    pub bias_slope_1: f64,
    pub v0: f64,
    pub v1: f64,
    pub fisher_upper: f64,
}

impl Lemma1Constants {
    /// `sqrt(3 snr Var(X)) + 3k`.
    pub fn rho_max(&self, k: f64) -> f64 {
        (3.0 * self.snr * self.variance).sqrt() + 3.0 * k
    }

    /// `sqrt(2 pi) exp(t² + snr E[X²])`.
    pub fn phi(&self, t: f64) -> f64 {
        SQRT_2PI * (t * t + self.snr * self.second_moment).exp()
    }
}

pub fn lemma1_constants(snr: f64, variance: f64, second_moment: f64) -> Result<Lemma1Constants> {
    check_nonneg("snr", snr)?;
    check_nonneg("variance", variance)?;
    check_nonneg("second_moment", second_moment)?;
    if second_moment < variance {
        return Err(Error::invalid(format!("E[X²] = {second_moment} is smaller than Var(X) = {variance}")));
    }
    let k = KernelSpec::gaussian();
    Ok(Lemma1Constants {
        snr,
        variance,
        second_moment,
        bias_slope_0: k.bias_slope_0,
        bias_slope_1: k.bias_slope_1,
        v0: k.total_variation(Order::Density),
        v1: k.total_variation(Order::Derivative),
        fisher_upper: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBranch {
    SecondMoment,
    SubGaussian,
}

/// Search over `v` for the truncation bound: a uniform grid, continued past
/// `end` (up to `extend_to`) while the minimum sits on the last point, then
/// golden-section refinement around the best grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VSearch {
    pub start: f64,
    pub step: f64,
    pub end: f64,
    pub extend_to: f64,
    pub tolerance: f64,
}

impl Default for VSearch {
    fn default() -> Self {
        Self { start: 0.05, step: 0.05, end: 5.0, extend_to: 100.0, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Tail {
    pub value: f64,
    pub v: f64,
    pub branch: TailBranch,
}

fn ln_base(k: f64, snr: f64, second_moment: f64, alpha: Option<f64>, branch: TailBranch) -> Result<f64> {
    match branch {
        TailBranch::SecondMoment => Ok(((snr * second_moment + 1.0) / (k * k)).ln()),
        TailBranch::SubGaussian => {
            let a = alpha.ok_or_else(|| Error::invalid("the sub-Gaussian branch needs alpha"))?;
            Ok(std::f64::consts::LN_2 + (a * a * snr - k * k) / 2.0)
        }
    }
}

/// `log[2 Γ^{1/(1+v)}(v + 1/2) / π^{1/(2(1+v))} · x^{v/(1+v)}]` given `log x`.
fn ln_lemma2_objective(v: f64, ln_x: f64) -> f64 {
    std::f64::consts::LN_2 + ln_gamma(v + 0.5) / (1.0 + v) - std::f64::consts::PI.ln() / (2.0 * (1.0 + v))
        + v / (1.0 + v) * ln_x
}

/// Truncation bound for one branch at a fixed `v`.
pub fn lemma2_branch(
    k: f64,
    snr: f64,
    second_moment: f64,
    alpha: Option<f64>,
    branch: TailBranch,
    v: f64,
) -> Result<f64> {
    check_pos("k_n", k)?;
    check_pos("v", v)?;
    let ln_x = ln_base(k, snr, second_moment, alpha, branch)?;
    Ok(ln_lemma2_objective(v, ln_x).exp())
}

fn minimise_v(ln_x: f64, search: &VSearch) -> (f64, f64) {
    let f = |v: f64| ln_lemma2_objective(v, ln_x);
    let mut best_v = search.start;
    let mut best = f(best_v);
    for i in 1.. {
        let v = search.start + i as f64 * search.step;
        // past the nominal grid, keep going only while still descending
        if v > search.end + 1e-12 && (best_v + search.step < v - 1e-12 || v > search.extend_to + 1e-12) {
            break;
        }
        let fv = f(v);
        if fv < best {
            best = fv;
            best_v = v;
        }
    }
    let (mut lo, mut hi) = ((best_v - search.step).max(1e-9), best_v + search.step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > search.tolerance {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let (gv, gf) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if gf < best {
        (gv, gf)
    } else {
        (best_v, best)
    }
}

/// Bound on the Fisher information outside `[-k, k]`, minimised over `v`.
/// With `alpha` the sub-Gaussian branch is also evaluated and the smaller
/// value returned. The value may exceed 1.
pub fn lemma2_tail(k: f64, snr: f64, second_moment: f64, alpha: Option<f64>, search: &VSearch) -> Result<Lemma2Tail> {
    check_pos("k_n", k)?;
    check_nonneg("snr", snr)?;
    check_nonneg("second_moment", second_moment)?;
    if !(search.start > 0.0 && search.step > 0.0 && search.end >= search.start) {
        return Err(Error::invalid("v search grid must be positive and non-empty"));
    }
    let mut branches = vec![TailBranch::SecondMoment];
    if alpha.is_some() {
        branches.push(TailBranch::SubGaussian);
    }
    let mut out: Option<Lemma2Tail> = None;
    for branch in branches {
        let ln_x = ln_base(k, snr, second_moment, alpha, branch)?;
        let (v, lnv) = minimise_v(ln_x, search);
        let value = lnv.exp();
        if out.is_none_or(|o| value < o.value) {
            out = Some(Lemma2Tail { value, v, branch });
        }
    }
    Ok(out.expect("at least one branch"))
}

/// Constants of the Gaussian-channel rate theorems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBoundConstants {
    pub snr: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// Present when the input is sub-Gaussian with a known proxy.
    pub c6: Option<f64>,
}

impl GaussianBoundConstants {
    pub fn new(snr: f64, variance: f64, second_moment: f64, alpha: Option<f64>) -> Result<Self> {
        check_pos("snr", snr)?;
        lemma1_constants(snr, variance, second_moment)?;
        if let Some(a) = alpha {
            check_pos("alpha", a)?;
        }
        let pi = std::f64::consts::PI;
        let e = std::f64::consts::E;
        let sqrt_gamma_3_2 = (pi.sqrt() / 2.0).sqrt();
        Ok(Self {
            snr,
            c1: pi * (1.0 - 1.0 / (2.0 * pi * e).sqrt()).powi(2),
            c2: e * pi * (1.0 - (2.0 / e + 1.0) / (2.0 * pi).sqrt()).powi(2),
            c3: (3.0 * snr * variance).sqrt(),
            c4: 2.0 * sqrt_gamma_3_2 * (snr * second_moment + 1.0).sqrt() / pi.powf(0.25),
            c5: SQRT_2PI * (snr * second_moment).exp(),
            c6: alpha.map(|a| 2f64.powf(1.5) * sqrt_gamma_3_2 * (a * a * snr / 4.0).exp() / pi.powf(0.25)),
        })
    }

    pub fn from_channel(model: &ChannelModel) -> Result<Self> {
        Self::new(model.snr, model.variance, model.second_moment, model.alpha)
    }

    fn c6(&self) -> Result<f64> {
        self.c6.ok_or_else(|| Error::invalid("sub-Gaussian form needs alpha (c6 is undefined)"))
    }
}

/// Exponents of the rate theorems: `a = n^{-w}`, `k_n = sqrt(u log n)` for
/// the unclipped estimator; `a0 = n^{-w0}`, `a1 = n^{-w1}`, `k_n = n^u` for
/// the clipped one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case")]
pub enum Exponents {
    Bhattacharya { u: f64, w: f64 },
    Clipped { u: f64, w0: f64, w1: f64 },
}

impl Exponents {
    pub fn validate(&self) -> Result<()> {
        let open = |name: &str, x: f64, hi: f64| {
            if x > 0.0 && x < hi {
                Ok(())
            } else {
                Err(Error::hypothesis(format!("{name} = {x} is not in (0, {hi})")))
            }
        };
        match *self {
            Exponents::Bhattacharya { u, w } => {
                open("w", w, 1.0 / 6.0)?;
                open("u", u, w)
            }
            Exponents::Clipped { u, w0, w1 } => {
                open("w0", w0, 0.25)?;
                open("w1", w1, 1.0 / 6.0)?;
                open("u", u, (w0 / 3.0).min(w1 / 2.0))
            }
        }
    }
}

fn check_n(n: f64) -> Result<()> {
    if n >= 2.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::hypothesis(format!("n = {n} must be >= 2")))
    }
}

/// Precision of the unclipped estimator at `n` samples.
pub fn theorem5_precision(n: f64, u: f64, w: f64, c: &GaussianBoundConstants, sub_gaussian: bool) -> Result<f64> {
    check_n(n)?;
    Exponents::Bhattacharya { u, w }.validate()?;
    let ln_n = n.ln();
    let k = (u * ln_n).sqrt();
    let n_uw = ((u - w) * ln_n).exp();
    let n_mw = (-w * ln_n).exp();
    let tail_ratio = c.c5 / (((w - u) * ln_n).exp() - 1.0);
    if sub_gaussian {
        let c6 = c.c6()?;
        Ok(n_mw * k * (c.c3 + 12.0 * k + 2.0 * c.c5 * n_uw) / (1.0 - n_uw) + tail_ratio + c6 * (-u / 4.0 * ln_n).exp())
    } else {
        Ok(n_mw * k * (4.0 * c.c3 + 12.0 * k + 2.0 * c.c5 * n_uw) / (1.0 - n_uw) + c.c4 / k + tail_ratio)
    }
}

/// Precision of the clipped estimator at `n` samples.
pub fn theorem6_precision(
    n: f64,
    u: f64,
    w0: f64,
    w1: f64,
    c: &GaussianBoundConstants,
    sub_gaussian: bool,
) -> Result<f64> {
    check_n(n)?;
    Exponents::Clipped { u, w0, w1 }.validate()?;
    let ln_n = n.ln();
    let p = |x: f64| (x * ln_n).exp();
    let first = 4.0 * p(3.0 * u - w0) * (c.c3 * p(-2.0 * u) + 3.0 * p(-u) + 3.0);
    let second = 4.0 * p(2.0 * u - w1) * (2.0 * c.c3 * p(-u) + 3.0);
    let tail = if sub_gaussian { c.c6()? * (-p(2.0 * u) / 4.0).exp() } else { c.c4 * p(-u) };
    Ok(first + second + tail)
}

pub fn precision(n: f64, exponents: &Exponents, c: &GaussianBoundConstants, sub_gaussian: bool) -> Result<f64> {
    match *exponents {
        Exponents::Bhattacharya { u, w } => theorem5_precision(n, u, w, c, sub_gaussian),
        Exponents::Clipped { u, w0, w1 } => theorem6_precision(n, u, w0, w1, c, sub_gaussian),
    }
}

/// Failure probability `2 exp(-c1 n^{1-4w0}) + 2 exp(-c2 n^{1-6w1})`
/// (with `w0 = w1 = w` for the unclipped estimator).
pub fn confidence_bound(n: f64, exponents: &Exponents, c: &GaussianBoundConstants) -> Result<f64> {
    check_n(n)?;
    exponents.validate()?;
    let (w0, w1) = match *exponents {
        Exponents::Bhattacharya { w, .. } => (w, w),
        Exponents::Clipped { w0, w1, .. } => (w0, w1),
    };
    let ln_n = n.ln();
    Ok(2.0 * (-c.c1 * ((1.0 - 4.0 * w0) * ln_n).exp()).exp() + 2.0 * (-c.c2 * ((1.0 - 6.0 * w1) * ln_n).exp()).exp())
}

/// Geometric grid of `points` values inside `(lo, hi)`, `margin` away from
/// each endpoint.
fn open_log_grid(lo: f64, hi: f64, points: usize, margin: f64) -> Vec<f64> {
    let (a, b) = (lo + margin, hi - margin);
    if !(a < b) || points == 0 {
        return Vec::new();
    }
    if points == 1 {
        return vec![(a * b).sqrt()];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..points).map(|i| (la + (lb - la) * i as f64 / (points - 1) as f64).exp()).collect()
}

const GRID_MARGIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorFamily {
    Bhattacharya,
    Clipped,
}

impl fmt::Display for EstimatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorFamily::Bhattacharya => "bhattacharya",
            EstimatorFamily::Clipped => "clipped",
        })
    }
}

/// Best precision either rate theorem guarantees at `n` samples subject to
/// `confidence_bound <= p_err`, over a log grid of exponents.
///
/// For the clipped estimator the precision is decreasing and the failure
/// probability increasing in each of `w0` and `w1`, so for each `w0` only the
/// largest feasible `w1` on the grid is kept.
pub fn optimal_precision(
    n: f64,
    p_err: f64,
    family: EstimatorFamily,
    c: &GaussianBoundConstants,
    sub_gaussian: bool,
    grid_points: usize,
) -> Result<Option<(f64, Exponents)>> {
    check_n(n)?;
    let mut best: Option<(f64, Exponents)> = None;
    let mut consider = |e: Exponents| -> Result<()> {
        let eps = precision(n, &e, c, sub_gaussian)?;
        if eps.is_finite() && best.is_none_or(|(b, _)| eps < b) {
            best = Some((eps, e));
        }
        Ok(())
    };
    match family {
        EstimatorFamily::Bhattacharya => {
            for w in open_log_grid(0.0, 1.0 / 6.0, grid_points, GRID_MARGIN) {
                let probe = Exponents::Bhattacharya { u: w / 2.0, w };
                if confidence_bound(n, &probe, c)? > p_err {
                    continue;
                }
                for u in open_log_grid(0.0, w, grid_points, GRID_MARGIN) {
                    consider(Exponents::Bhattacharya { u, w })?;
                }
            }
        }
        EstimatorFamily::Clipped => {
            let w1s = open_log_grid(0.0, 1.0 / 6.0, grid_points, GRID_MARGIN);
            for w0 in open_log_grid(0.0, 0.25, grid_points, GRID_MARGIN) {
                let feasible = w1s.iter().rev().find(|&&w1| {
                    let probe = Exponents::Clipped { u: (w0 / 3.0).min(w1 / 2.0) / 2.0, w0, w1 };
                    confidence_bound(n, &probe, c).is_ok_and(|p| p <= p_err)
                });
                let Some(&w1) = feasible else { continue };
                for u in open_log_grid(0.0, (w0 / 3.0).min(w1 / 2.0), grid_points, GRID_MARGIN) {
                    consider(Exponents::Clipped { u, w0, w1 })?;
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityMethod {
    /// Optimise bandwidths, truncation and the split of `p_err` between the
    /// two concentration events directly in the general bounds.
    #[default]
    FreeParameters,
    /// Restrict to the exponent families of the rate theorems.
    TheoremExponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexitySpec {
    pub snr: f64,
    pub variance: f64,
    pub second_moment: f64,
    pub alpha: Option<f64>,
    pub method: ComplexityMethod,
    pub envelope_mass: EnvelopeMass,
    /// Total variation of `K''` used for the derivative concentration.
    pub v1: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
    /// Interior points for the split of `p_err` between the two events.
    pub split_points: usize,
    pub exponent_grid: usize,
    pub max_log10_n: f64,
    pub bisection_steps: usize,
}

impl Default for ComplexitySpec {
    fn default() -> Self {
        Self {
            snr: 1.0,
            variance: 1.0,
            second_moment: 1.0,
            alpha: Some(1.0),
            method: ComplexityMethod::FreeParameters,
            envelope_mass: EnvelopeMass::TwoSided,
            v1: lemma1_v1(),
            k_min: 0.05,
            k_max: 12.0,
            k_points: 600,
            split_points: 199,
            exponent_grid: 200,
            max_log10_n: 40.0,
            bisection_steps: 60,
        }
    }
}

impl ComplexitySpec {
    pub fn for_channel(model: &ChannelModel) -> Self {
        Self {
            snr: model.snr,
            variance: model.variance,
            second_moment: model.second_moment,
            alpha: model.alpha,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        lemma1_constants(self.snr, self.variance, self.second_moment)?;
        check_pos("v1", self.v1)?;
        check_pos("k_min", self.k_min)?;
        if !(self.k_max > self.k_min) || self.k_points < 2 || self.split_points < 1 || self.exponent_grid < 2 {
            return Err(Error::invalid("complexity search grids are empty"));
        }
        if !(self.max_log10_n > 1.0) {
            return Err(Error::invalid("max_log10_n must exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComplexityParameters {
    Free {
        a0: f64,
        a1: f64,
        k_n: f64,
        eps0: f64,
        eps1: f64,
        /// Share of `p_err` given to the density event.
        p_split: f64,
    },
    Exponents(Exponents),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub family: EstimatorFamily,
    pub eps: f64,
    pub p_err: f64,
    pub log10_n: f64,
    /// Precision guaranteed at `10^log10_n`.
    pub achieved_eps: f64,
    pub parameters: ComplexityParameters,
}

/// Optimal concentration radius for one derivative order: with
/// `B = v sqrt(log(2/p) / (2n))`, minimises `a s + B / a^{r+1}` over `a`.
fn concentration_radius(n: f64, p: f64, slope: f64, v: f64, r: i32) -> (f64, f64) {
    let b = v * ((2.0 / p).ln() / (2.0 * n)).sqrt();
    let a = if r == 0 { (b / slope).sqrt() } else { (2.0 * b / slope).cbrt() };
    (a, a * slope + b / a.powi(r + 1))
}

struct FreeSearch {
    ks: Vec<f64>,
    tails: Vec<f64>,
    phis: Vec<f64>,
    rho_max: Vec<f64>,
    masses: Vec<ScoreMasses>,
    splits: Vec<f64>,
    s0: f64,
    s1: f64,
    v0: f64,
    v1: f64,
}

impl FreeSearch {
    fn new(spec: &ComplexitySpec, family: EstimatorFamily) -> Result<Self> {
        let l1 = lemma1_constants(spec.snr, spec.variance, spec.second_moment)?;
        let ks: Vec<f64> = (0..spec.k_points)
            .map(|i| spec.k_min + (spec.k_max - spec.k_min) * i as f64 / (spec.k_points - 1) as f64)
            .collect();
        let search = VSearch::default();
        let tails = ks
            .iter()
            .map(|&k| lemma2_tail(k, spec.snr, spec.second_moment, spec.alpha, &search).map(|t| t.value))
            .collect::<Result<Vec<_>>>()?;
        let masses = if family == EstimatorFamily::Clipped {
            ks.iter()
                .map(|&k| score_masses(|t| l1.rho_max(t.abs()), k, DEFAULT_MASS_GRID, spec.envelope_mass))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let splits = (1..=spec.split_points).map(|i| i as f64 / (spec.split_points + 1) as f64).collect();
        Ok(Self {
            phis: ks.iter().map(|&k| l1.phi(k)).collect(),
            rho_max: ks.iter().map(|&k| l1.rho_max(k)).collect(),
            ks,
            tails,
            masses,
            splits,
            s0: l1.bias_slope_0,
            s1: l1.bias_slope_1,
            v0: l1.v0,
            v1: spec.v1,
        })
    }

    /// Smallest precision guaranteed at `n` with failure probability `p_err`.
    fn best(&self, family: EstimatorFamily, n: f64, p_err: f64) -> (f64, ComplexityParameters) {
        let per_split = |&f: &f64| {
            let (a0, e0) = concentration_radius(n, f * p_err, self.s0, self.v0, 0);
            let (a1, e1) = concentration_radius(n, (1.0 - f) * p_err, self.s1, self.v1, 1);
            let mut best = (f64::INFINITY, 0usize);
            for (i, &k) in self.ks.iter().enumerate() {
                let val = match family {
                    EstimatorFamily::Bhattacharya => {
                        let phi = self.phis[i];
                        let den = 1.0 - e0 * phi;
                        if den <= 0.0 {
                            continue;
                        }
                        (4.0 * e1 * k * self.rho_max[i] + 2.0 * e1 * e1 * k * phi + e0 * phi) / den + self.tails[i]
                    }
                    EstimatorFamily::Clipped => clipped_bound_from_masses(e0, e1, self.masses[i], self.tails[i]),
                };
                if val < best.0 {
                    best = (val, i);
                }
            }
            let params = ComplexityParameters::Free { a0, a1, k_n: self.ks[best.1], eps0: e0, eps1: e1, p_split: f };
            (best.0, params)
        };
        let results: Vec<(f64, ComplexityParameters)> = self.splits.par_iter().map(per_split).collect();
        results.into_iter().fold(
            (
                f64::INFINITY,
                ComplexityParameters::Free { a0: 0.0, a1: 0.0, k_n: 0.0, eps0: 0.0, eps1: 0.0, p_split: 0.0 },
            ),
            |acc, r| {
                if r.0 < acc.0 {
                    r
                } else {
                    acc
                }
            },
        )
    }
}

/// Smallest `n` (as `log10 n`) for which the bounds guarantee precision
/// `eps` with failure probability at most `p_err`, found by bisection on
/// `log10 n ∈ [1, max_log10_n]`.
pub fn sample_complexity(
    eps: f64,
    p_err: f64,
    family: EstimatorFamily,
    spec: &ComplexitySpec,
) -> Result<ComplexityResult> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("target eps must be in (0, 1], got {eps}")));
    }
    if !(p_err > 0.0 && p_err < 1.0) {
        return Err(Error::invalid(format!("target p_err must be in (0, 1), got {p_err}")));
    }
    spec.validate()?;
    let evaluate: Box<dyn Fn(f64) -> Result<(f64, ComplexityParameters)> + Sync> = match spec.method {
        ComplexityMethod::FreeParameters => {
            let search = FreeSearch::new(spec, family)?;
            Box::new(move |l10: f64| Ok(search.best(family, 10f64.powf(l10), p_err)))
        }
        ComplexityMethod::TheoremExponents => {
            let c = GaussianBoundConstants::new(spec.snr, spec.variance, spec.second_moment, spec.alpha)?;
            let sub_gaussian = spec.alpha.is_some();
            let grid = spec.exponent_grid;
            Box::new(move |l10: f64| {
                Ok(optimal_precision(10f64.powf(l10), p_err, family, &c, sub_gaussian, grid)?
                    .map(|(e, x)| (e, ComplexityParameters::Exponents(x)))
                    .unwrap_or((
                        f64::INFINITY,
                        ComplexityParameters::Exponents(Exponents::Bhattacharya { u: 0.0, w: 0.0 }),
                    )))
            })
        }
    };
    let (top_eps, top_params) = evaluate(spec.max_log10_n)?;
    if !(top_eps <= eps) {
        return Err(Error::Infeasible { max_log10_n: spec.max_log10_n, best_eps: top_eps, best_p_err: p_err });
    }
    let (mut lo, mut hi) = (1.0f64, spec.max_log10_n);
    let (mut hi_eps, mut hi_params) = (top_eps, top_params);
    let (lo_eps, lo_params) = evaluate(lo)?;
    if lo_eps <= eps {
        return Ok(ComplexityResult { family, eps, p_err, log10_n: lo, achieved_eps: lo_eps, parameters: lo_params });
    }
    for _ in 0..spec.bisection_steps {
        let mid = 0.5 * (lo + hi);
        let (m_eps, m_params) = evaluate(mid)?;
        if m_eps <= eps {
            hi = mid;
            hi_eps = m_eps;
            hi_params = m_params;
        } else {
            lo = mid;
        }
    }
    Ok(ComplexityResult { family, eps, p_err, log10_n: hi, achieved_eps: hi_eps, parameters: hi_params })
}
