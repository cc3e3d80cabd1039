//! Invariant checks shared by the module test files and the acceptance
//! suite. Each check returns a one-line summary on success.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use fisherinfo::experiment_harness::{self, ExperimentConfig};
use fisherinfo::fisher_estimators::{bhattacharya, clipped, mmse_from_fisher, ClipEnvelope, EstimatorConfig};
use fisherinfo::gaussian_channel::{
    sample_channel, sample_channel_trial, true_density, true_density_deriv, true_fisher, true_mmse, true_score,
    ChannelModel,
};
use fisherinfo::kernel_density::{
    dkw_tail, kde_at, kde_deriv_at, kde_pair_on_grid, ks_distance, KernelSpec, Order, SampleSet,
};
use fisherinfo::quadrature::{integrate, simpson_sum, uniform_grid};
use fisherinfo::stats::{bootstrap_two_sample, mean};
use fisherinfo::theory_bounds::{
    affine_envelope_masses, bhattacharya_error_bound, clipped_error_bound, clipped_max_form_bound, confidence_bound,
    lemma1_constants, lemma1_v1, lemma2_branch, lemma2_tail, modified_error_bound, score_masses, theorem5_precision,
    theorem6_precision, EnvelopeMass, Exponents, GaussianBoundConstants, TailBranch, TailModel, VSearch, ZeroCount,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !($cond) {
            return Err(format!($($fmt)*));
        }
    };
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `∫_{-k}^{k} f'²/f` for `f = N(y, a²)`, in closed form.
pub fn truncated_gaussian_fisher(y: f64, a: f64, k: f64) -> f64 {
    let (lo, hi) = ((-k - y) / a, (k - y) / a);
    let part = |z: f64| normal_cdf(z) - z * normal_pdf(z);
    (part(hi) - part(lo)) / (a * a)
}

pub fn channel_models() -> Vec<ChannelModel> {
    vec![ChannelModel::gaussian(1.0), ChannelModel::binary(1.0), ChannelModel::gaussian(5.0), ChannelModel::binary(5.0)]
}

// ---- kernel_density ----

pub fn kde_integrates_to_one() -> Check {
    let mut worst = 0.0f64;
    for (i, m) in channel_models().iter().enumerate() {
        let s = sample_channel(m, 200, 10 + i as u64).map_err(|e| e.to_string())?;
        for a in [0.1, 0.3, 1.0] {
            let k = KernelSpec::gaussian();
            let v = integrate(|t| kde_at(&s, a, &k, t).unwrap(), s.min() - 10.0 * a, s.max() + 10.0 * a, 8001)
                .map_err(|e| e.to_string())?;
            worst = worst.max((v - 1.0).abs());
        }
    }
    ensure!(worst <= 1e-6, "kde integral off by {worst}");
    Ok(format!("max |∫f_n - 1| = {worst:.1e}"))
}

pub fn kde_derivative_consistency() -> Check {
    let mut r = rng(11);
    let s = sample_channel(&ChannelModel::binary(2.0), 300, 4).map_err(|e| e.to_string())?;
    let k = KernelSpec::gaussian();
    let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let t: f64 = r.random_range(-5.0..5.0);
        let a = 0.4;
        let h = 1e-5;
        let fd = (kde_at(&s, a, &k, t + h).unwrap() - kde_at(&s, a, &k, t - h).unwrap()) / (2.0 * h);
        let d = kde_deriv_at(&s, a, &k, t).unwrap();
        worst_abs = worst_abs.max((fd - d).abs());
        if d.abs() > 1e-3 {
            worst_rel = worst_rel.max(((fd - d) / d).abs());
        }
    }
    ensure!(worst_abs <= 1e-6, "finite difference off by {worst_abs}");
    ensure!(worst_rel <= 1e-5, "relative finite-difference error {worst_rel}");
    Ok(format!("abs {worst_abs:.1e}, rel {worst_rel:.1e}"))
}

pub fn kde_bias_within_bound() -> Check {
    let model = ChannelModel::binary(1.0);
    let (n, a, resamples) = (500, 0.3, 2000u64);
    let k = KernelSpec::gaussian();
    let grid = uniform_grid(-4.0, 4.0, 17);
    let mut sums = vec![0.0; grid.len()];
    let mut sq = vec![0.0; grid.len()];
    for trial in 0..resamples {
        let s = sample_channel_trial(&model, n, 77, trial, 0).map_err(|e| e.to_string())?;
        let pairs = kde_pair_on_grid(&s, a, a, &k, &grid).map_err(|e| e.to_string())?;
        for (i, (f, _)) in pairs.iter().enumerate() {
            sums[i] += f;
            sq[i] += f * f;
        }
    }
    let delta = k.bias(Order::Density, a);
    let r = resamples as f64;
    let mut worst_margin = f64::INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let m = sums[i] / r;
        let se = ((sq[i] / r - m * m).max(0.0) / r).sqrt();
        let dev = (m - true_density(&model, t).unwrap()).abs();
        worst_margin = worst_margin.min(delta + 3.0 * se - dev);
        ensure!(dev <= delta + 3.0 * se, "bias {dev} at t = {t} exceeds {delta} + 3·{se}");
    }
    Ok(format!("delta_0 = {delta:.4}, smallest slack {worst_margin:.4}"))
}

pub fn dkw_rate_within_bound() -> Check {
    let (n, eps, resamples) = (200usize, 0.1, 10_000usize);
    let mut r = rng(21);
    let mut hits = 0usize;
    for _ in 0..resamples {
        let v: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let s = SampleSet::new(v).unwrap();
        if ks_distance(&s, |t| t.clamp(0.0, 1.0)) > eps {
            hits += 1;
        }
    }
    let bound = dkw_tail(n, eps);
    let freq = hits as f64 / resamples as f64;
    let sigma = (bound * (1.0 - bound) / resamples as f64).sqrt();
    ensure!(freq <= bound + 3.0 * sigma, "DKW frequency {freq} exceeds {bound}");
    Ok(format!("frequency {freq:.4} <= bound {bound:.4}"))
}

// ---- fisher_estimators ----

fn random_samples(r: &mut ChaCha8Rng, n: usize, spread: f64) -> SampleSet {
    SampleSet::new((0..n).map(|_| r.random_range(-spread..spread)).collect()).unwrap()
}

pub fn estimators_nonnegative() -> Check {
    let mut r = rng(31);
    for _ in 0..50 {
        let n = r.random_range(1..60);
        let s = random_samples(&mut r, n, 5.0);
        let cfg = EstimatorConfig::new(r.random_range(0.05..2.0), r.random_range(0.05..2.0), r.random_range(0.5..12.0))
            .with_grid_points(401)
            .with_clip_envelope(ClipEnvelope::constant(r.random_range(0.0..5.0)));
        let b = bhattacharya(&s, &cfg).map_err(|e| e.to_string())?.value;
        let c = clipped(&s, &cfg).map_err(|e| e.to_string())?.value;
        ensure!(b >= 0.0 && c >= 0.0, "negative estimate {b} / {c}");
    }
    Ok("50 random instances".into())
}

pub fn clip_dominance() -> Check {
    let mut r = rng(32);
    for _ in 0..30 {
        let s = random_samples(&mut r, 40, 4.0);
        let env = ClipEnvelope::Affine { intercept: r.random_range(0.0..2.0), slope: r.random_range(0.0..3.0) };
        let cfg = EstimatorConfig::new(0.3, 0.3, 6.0).with_grid_points(601).with_clip_envelope(env.clone());
        let c = clipped(&s, &cfg).map_err(|e| e.to_string())?.value;
        let nodes = uniform_grid(-6.0, 6.0, 601);
        let pairs = kde_pair_on_grid(&s, 0.3, 0.3, &KernelSpec::gaussian(), &nodes).unwrap();
        let vals: Vec<f64> = pairs.iter().zip(&nodes).map(|((_, d), &t)| env.eval(t).abs() * d.abs()).collect();
        let cap = simpson_sum(&vals, &nodes, 12.0 / 600.0).unwrap();
        ensure!(c <= cap + 1e-12, "clipped {c} above envelope integral {cap}");
    }
    Ok("30 random envelopes".into())
}

pub fn clip_inactive_identity() -> Check {
    let s = sample_channel(&ChannelModel::gaussian(1.0), 400, 5).unwrap();
    let cfg = EstimatorConfig::new(0.5, 0.5, 5.0).with_density_floor(0.0);
    let b = bhattacharya(&s, &cfg).unwrap().value;
    let c = clipped(&s, &cfg.clone().with_clip_envelope(ClipEnvelope::constant(1e300))).unwrap();
    ensure!(c.clip_active_fraction == 0.0, "clip fired");
    ensure!(b == c.value, "not identical: {b} vs {}", c.value);
    Ok(format!("bit-identical ({b:.6})"))
}

pub fn brown_consistency() -> Check {
    let mut worst = 0.0f64;
    for (fisher, snr) in [(0.5, 1.0), (0.0909, 10.0), (0.3, 0.7), (0.123456789, 3.3)] {
        let m = mmse_from_fisher(fisher, snr).unwrap();
        worst = worst.max((m * snr + fisher - 1.0).abs());
    }
    ensure!(worst <= 1e-12, "Brown identity off by {worst}");
    Ok(format!("max residual {worst:.1e}"))
}

pub fn single_sample_quadrature_oracle() -> Check {
    let mut worst = 0.0f64;
    for (y, a, k) in [(0.0, 1.0, 10.0), (0.0, 0.5, 10.0), (0.7, 0.8, 2.0), (-1.0, 0.3, 1.5)] {
        let s = SampleSet::new(vec![y]).unwrap();
        let cfg = EstimatorConfig::new(a, a, k).with_clip_envelope(ClipEnvelope::constant(1e300));
        let exact = truncated_gaussian_fisher(y, a, k);
        let b = bhattacharya(&s, &cfg).unwrap().value;
        let c = clipped(&s, &cfg).unwrap().value;
        worst = worst.max((b - exact).abs()).max((c - exact).abs());
    }
    ensure!(worst <= 1e-4, "single-sample oracle off by {worst}");
    Ok(format!("max error {worst:.1e}"))
}

pub fn shift_equivariance() -> Check {
    let s = sample_channel(&ChannelModel::gaussian(1.0), 50, 8).unwrap();
    let mut worst = 0.0f64;
    for c in [0.5, 1.0, 2.0] {
        let shifted = SampleSet::new(s.values().iter().map(|y| y + c).collect()).unwrap();
        let base = EstimatorConfig::new(0.5, 0.5, 15.0).with_grid_points(4001);
        let wide = EstimatorConfig::new(0.5, 0.5, 15.0 + c).with_grid_points(4001);
        let b0 = bhattacharya(&s, &base).unwrap().value;
        let b1 = bhattacharya(&shifted, &wide).unwrap().value;
        worst = worst.max((b0 - b1).abs());
    }
    ensure!(worst < 1e-8, "shift changed the estimate by {worst}");
    Ok(format!("max change {worst:.1e}"))
}

// ---- gaussian_channel ----

pub fn brown_closure() -> Check {
    let mut worst = 0.0f64;
    for i in 1..=100 {
        let snr = i as f64 * 0.1;
        for m in [ChannelModel::gaussian(snr), ChannelModel::binary(snr)] {
            let r = (1.0 - snr * true_mmse(&m).unwrap() - true_fisher(&m).unwrap()).abs();
            worst = worst.max(r);
        }
    }
    ensure!(worst <= 1e-10, "Brown closure off by {worst}");
    Ok(format!("max residual {worst:.1e}"))
}

/// Monte Carlo estimate of the binary-input MMSE and its standard error.
pub fn binary_mmse_monte_carlo(snr: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let g = snr.sqrt();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = if r.random::<bool>() { 1.0 } else { -1.0 };
        let z: f64 = r.sample(rand_distr::StandardNormal);
        let y = g * x + z;
        let e = (x - (g * y).tanh()).powi(2);
        s += e;
        s2 += e * e;
    }
    let m = s / n as f64;
    (m, ((s2 / n as f64 - m * m) / n as f64).sqrt())
}

pub fn binary_mmse_matches_monte_carlo() -> Check {
    let mut out = Vec::new();
    for (snr, seed) in [(1.0, 101), (5.0, 102)] {
        let (mc, se) = binary_mmse_monte_carlo(snr, 10_000_000, seed);
        let q = true_mmse(&ChannelModel::binary(snr)).unwrap();
        ensure!((mc - q).abs() <= 3.0 * se, "snr {snr}: quadrature {q} vs Monte Carlo {mc} ± {se}");
        out.push(format!("snr {snr}: {q:.6} vs {mc:.6}±{se:.1e}"));
    }
    Ok(out.join("; "))
}

pub fn fisher_in_unit_interval() -> Check {
    for i in 1..=200 {
        let snr = i as f64 * 0.25;
        for m in [ChannelModel::gaussian(snr), ChannelModel::binary(snr)] {
            let f = true_fisher(&m).unwrap();
            ensure!(f > 0.0 && f <= 1.0, "I = {f} at snr {snr}");
        }
    }
    Ok("snr 0.25..50".into())
}

pub fn envelopes_sound() -> Check {
    for m in channel_models() {
        let l1 = lemma1_constants(m.snr, m.variance, m.second_moment).unwrap();
        for t in uniform_grid(-6.0, 6.0, 241) {
            let f = true_density(&m, t).unwrap();
            ensure!(1.0 / f <= l1.phi(t.abs()), "phi envelope fails at t = {t}, snr {}", m.snr);
            let rho = (true_density_deriv(&m, t).unwrap() / f).abs();
            ensure!(rho <= l1.rho_max(t.abs()), "rho envelope fails at t = {t}, snr {}", m.snr);
        }
    }
    Ok("both inputs, snr 1 and 5, |t| <= 6".into())
}

// ---- theory_bounds ----

pub fn bounds_monotone() -> Check {
    let tail = TailModel::gaussian_channel(1.0, 1.0, 1.0, Some(1.0)).unwrap();
    let z = ZeroCount::known(1);
    let eps: Vec<f64> = (0..30).map(|i| 1e-6 * 1.3f64.powi(i)).collect();
    for w in eps.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let b = |e0, e1| bhattacharya_error_bound(e0, e1, 2.0, &tail, 1.0).unwrap();
        let m = |e0, e1| modified_error_bound(e0, e1, 2.0, &tail, &z, &z).unwrap();
        let c = |e0, e1| clipped_error_bound(e0, e1, 2.0, &tail).unwrap();
        for f in [&b as &dyn Fn(f64, f64) -> f64, &m, &c] {
            ensure!(f(lo, 1e-4) <= f(hi, 1e-4), "not nondecreasing in eps0");
            ensure!(f(1e-6, lo) <= f(1e-6, hi), "not nondecreasing in eps1");
        }
    }
    let c = GaussianBoundConstants::new(1.0, 1.0, 1.0, Some(1.0)).unwrap();
    for sg in [true, false] {
        let mut prev5 = f64::INFINITY;
        let mut prev6 = f64::INFINITY;
        for i in 0..=270 {
            let n = 10f64.powf(3.0 + i as f64 * 0.1);
            let e5 = theorem5_precision(n, 0.05, 0.15, &c, sg).unwrap();
            let e6 = theorem6_precision(n, 0.03, 0.2, 0.12, &c, sg).unwrap();
            ensure!(e5 <= prev5 && e6 <= prev6, "precision increased at n = {n:e}");
            prev5 = e5;
            prev6 = e6;
        }
    }
    Ok("eps0/eps1 scans and n in [1e3, 1e30]".into())
}

pub fn max_form_dominated() -> Check {
    let mut checked = 0;
    for m in channel_models() {
        let l1 = lemma1_constants(m.snr, m.variance, m.second_moment).unwrap();
        let tail = TailModel::from_channel(&m).unwrap();
        for k in [0.5, 1.0, 2.0, 4.0] {
            let truth = score_masses(|t| true_score(&m, t).unwrap(), k, 2001, EnvelopeMass::TwoSided).unwrap();
            let env = score_masses(|t| l1.rho_max(t.abs()), k, 2001, EnvelopeMass::TwoSided).unwrap();
            let ck = (tail.c_tail)(k);
            for (e0, e1) in [(1e-4, 1e-3), (1e-2, 1e-2), (0.1, 0.05)] {
                let max_form = clipped_max_form_bound(e0, e1, truth, env, ck).unwrap();
                let summed = clipped_error_bound(e0, e1, k, &tail).unwrap();
                ensure!(max_form <= summed + 1e-12, "max form {max_form} > summed {summed}");
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} instances"))
}

pub fn constants_from_first_principles() -> Check {
    for (snr, var, ex2, alpha) in [(1.0, 1.0, 1.0, 1.0), (2.5, 0.5, 0.75, 1.3), (0.2, 3.0, 4.0, 2.0)] {
        let c = GaussianBoundConstants::new(snr, var, ex2, Some(alpha)).unwrap();
        let l1 = lemma1_constants(snr, var, ex2).unwrap();
        let c1 = 2.0 * (1.0 - l1.bias_slope_0).powi(2) / (l1.v0 * l1.v0);
        let c2 = 2.0 * (1.0 - l1.bias_slope_1).powi(2) / lemma1_v1().powi(2);
        let c3 = l1.rho_max(0.0);
        let c4 = lemma2_branch(1.0, snr, ex2, None, TailBranch::SecondMoment, 1.0).unwrap();
        let c5 = l1.phi(0.0);
        let c6 = lemma2_branch(1.0, snr, ex2, Some(alpha), TailBranch::SubGaussian, 1.0).unwrap() * 0.25f64.exp();
        for (name, stored, fresh) in [
            ("c1", c.c1, c1),
            ("c2", c.c2, c2),
            ("c3", c.c3, c3),
            ("c4", c.c4, c4),
            ("c5", c.c5, c5),
            ("c6", c.c6.unwrap(), c6),
        ] {
            ensure!(((stored - fresh) / fresh).abs() < 1e-12, "{name}: {stored} vs {fresh}");
        }
    }
    Ok("c1..c6 agree to 12 significant digits".into())
}

/// Standard normal `f` with one sample at `y`: eps0/eps1 measured exactly on
/// a fine grid, envelopes known in closed form.
pub fn single_sample_soundness() -> Check {
    let k = 1.5;
    let tail = TailModel::new(
        |x| (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp(),
        |t| t.abs(),
        |x| x,
        |x| {
            // ∫_{|t|>x} t² φ(t) dt
            2.0 * (x * normal_pdf(x) + 1.0 - normal_cdf(x))
        },
    );
    let mut out = Vec::new();
    for (y, a) in [(0.1, 1.0), (0.05, 0.9), (-0.08, 1.1)] {
        let s = SampleSet::new(vec![y]).unwrap();
        let fine = uniform_grid(-k, k, 20001);
        let fnn = |t: f64| normal_pdf((t - y) / a) / a;
        let dfn = |t: f64| -(t - y) / (a * a) * fnn(t);
        let eps0 = fine.iter().map(|&t| (fnn(t) - normal_pdf(t)).abs()).fold(0.0, f64::max);
        let eps1 = fine.iter().map(|&t| (dfn(t) + t * normal_pdf(t)).abs()).fold(0.0, f64::max);
        let est = bhattacharya(&s, &EstimatorConfig::new(a, a, k)).unwrap().value;
        let bound = bhattacharya_error_bound(eps0, eps1, k, &tail, 1.0).map_err(|e| e.to_string())?;
        ensure!((1.0 - est).abs() <= bound, "|I - I_n| = {} exceeds {bound}", (1.0 - est).abs());
        out.push(format!("{:.3} <= {:.3}", (1.0 - est).abs(), bound));
    }
    Ok(out.join(", "))
}

pub fn lemma2_dominates_monte_carlo() -> Check {
    let mut out = Vec::new();
    for (i, m) in channel_models().iter().enumerate() {
        let s = sample_channel(m, 1_000_000, 500 + i as u64).unwrap();
        for k in [1.0, 2.0, 3.0] {
            let vals: Vec<f64> = s
                .values()
                .iter()
                .map(|&y| if y.abs() >= k { true_score(m, y).unwrap().powi(2) } else { 0.0 })
                .collect();
            let mc = mean(&vals);
            let se = (vals.iter().map(|v| (v - mc).powi(2)).sum::<f64>() / (vals.len() as f64 - 1.0)).sqrt()
                / (vals.len() as f64).sqrt();
            let bound = lemma2_tail(k, m.snr, m.second_moment, m.alpha, &VSearch::default()).unwrap().value;
            ensure!(bound >= mc - 3.0 * se, "c({k}) bound {bound} below Monte Carlo {mc} ± {se}");
        }
        out.push(format!("{} snr {}", m.input.name(), m.snr));
    }
    Ok(out.join(", "))
}

pub fn envelope_mass_oracle() -> Check {
    let c3 = 3f64.sqrt();
    let mut worst = 0.0f64;
    for k in [0.5, 1.0, 3.0, 10.0] {
        let q = score_masses(|t| c3 + 3.0 * t.abs(), k, 2001, EnvelopeMass::TwoSided).unwrap();
        let e = affine_envelope_masses(c3, k);
        worst = worst.max((q.m1 - e.m1).abs()).max((q.m2 - e.m2).abs());
    }
    ensure!(worst <= 1e-8, "quadrature vs closed form off by {worst}");
    Ok(format!("max error {worst:.1e}"))
}

pub fn confidence_by_construction() -> Check {
    let c = GaussianBoundConstants::new(1.0, 1.0, 1.0, Some(1.0)).unwrap();
    let n: f64 = 1e6;
    let l20 = 20f64.ln();
    let w0 = (1.0 - (l20 / c.c1).ln() / n.ln()) / 4.0;
    let w1 = (1.0 - (l20 / c.c2).ln() / n.ln()) / 6.0;
    let p = confidence_bound(n, &Exponents::Clipped { u: 0.01, w0, w1 }, &c).unwrap();
    ensure!((p - 0.2).abs() < 1e-12, "p_err = {p}");
    Ok(format!("w0 = {w0:.4}, w1 = {w1:.4}, p_err = {p}"))
}

// ---- experiment_harness ----

pub fn histogram_config(input: &str, n_list: &[usize], trials: usize, seed: u64, out: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{"kind":"histogram","channel":{{"input":"{input}","snr":1}},"n_list":{n_list:?},"trials":{trials},"seed":{seed},"output_path":"{out}"}}"#
    );
    serde_json::from_str(&text).unwrap()
}

pub fn harness_deterministic() -> Check {
    let cfg = histogram_config("binary", &[300, 600], 6, 9, "det");
    let a = experiment_harness::run(&cfg).unwrap();
    let b = experiment_harness::run(&cfg).unwrap();
    let ja = serde_json::to_string(&a).unwrap();
    let jb = serde_json::to_string(&b).unwrap();
    ensure!(ja == jb, "reports differ");
    ensure!(experiment_harness::render_csv(&a) == experiment_harness::render_csv(&b), "CSV differs");
    Ok(format!("{} bytes identical", ja.len()))
}

pub fn histogram_mass_and_bias() -> Check {
    for trials in [1, 7] {
        let cfg = histogram_config("gaussian", &[200, 400], trials, 3, "mass");
        let r = experiment_harness::run(&cfg).unwrap();
        for h in &r.histograms {
            ensure!(h.estimates.total() == trials as u64, "estimate histogram mass");
            ensure!(h.abs_errors.total() == trials as u64, "error histogram mass");
        }
        for j in 0..r.labels.len() {
            let d = mean(&r.column(j)) - r.truth[j] - r.bias[j];
            ensure!(d.abs() <= 1e-12, "bias inconsistency {d}");
        }
        ensure!(r.degenerate == (trials == 1), "degenerate flag");
    }
    Ok("trials 1 and 7".into())
}

pub fn error_shrinks_with_n(trials: usize) -> Check {
    let cfg = histogram_config("gaussian", &[1000, 10000], trials, 2024, "smoke");
    let r = experiment_harness::run(&cfg).unwrap();
    let err = |j: usize| r.column(j).iter().map(|x| (x - r.truth[j]).abs()).collect::<Vec<f64>>();
    let (e3, e4) = (err(0), err(1));
    let ci = bootstrap_two_sample(&e4, &e3, |a, b| mean(a) - mean(b), 2000, 0.99, 5).unwrap();
    ensure!(ci.upper_one_sided < 0.0, "mean |error| difference upper 99% bound {}", ci.upper_one_sided);
    Ok(format!(
        "mean |err| {:.4} -> {:.4}, 99% upper bound on difference {:.4}",
        mean(&e3),
        mean(&e4),
        ci.upper_one_sided
    ))
}
