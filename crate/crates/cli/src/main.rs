//! `fisherinfo` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 violated hypothesis or
//! infeasible target, 3 I/O failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fisherinfo::experiment_harness::{self, ExperimentConfig};
use fisherinfo::fisher_estimators::{bhattacharya, clipped, mmse_from_fisher, ClipEnvelope, EstimatorConfig};
use fisherinfo::gaussian_channel::{sample_channel, true_density, true_density_deriv, ChannelModel};
use fisherinfo::kernel_density::{kde_pair_on_grid, KernelSpec, SampleSet};
use fisherinfo::quadrature::uniform_grid;
use fisherinfo::theory_bounds::{
    bhattacharya_error_bound, clipped_error_bound, confidence_bound, lemma1_constants, lemma2_tail,
    modified_error_bound, psi, sample_complexity, theorem5_precision, theorem6_precision, ComplexityMethod,
    ComplexitySpec, EnvelopeMass, EstimatorFamily, Exponents, GaussianBoundConstants, TailModel, VSearch, ZeroCount,
};
use fisherinfo::Error;

#[derive(Parser, Debug)]
#[command(name = "fisherinfo", version, about = "Fisher information and MMSE estimation from samples")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, env = "FISHERINFO_THREADS", value_parser = parse_count)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the Fisher information of a sample.
    Estimate(EstimateArgs),
    /// Evaluate f_n and f_n' on a grid (CSV).
    Density(DensityArgs),
    /// Evaluate an error bound and its intermediate constants.
    Bounds(BoundsArgs),
    /// Minimal sample size for a target precision and confidence.
    Complexity(ComplexityArgs),
    /// Run an experiment described by a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum InputKind {
    Gaussian,
    Binary,
}

#[derive(Args, Debug)]
struct SampleSource {
    /// One value per line, or a single-column CSV with optional header.
    #[arg(long, conflicts_with = "channel")]
    input: Option<PathBuf>,
    /// Draw synthetic data from the Gaussian channel with this input law.
    #[arg(long)]
    channel: Option<InputKind>,
    #[arg(long, value_parser = parse_real)]
    snr: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0, value_parser = parse_seed)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EstimatorChoice {
    Bhattacharya,
    Clipped,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    source: SampleSource,
    #[arg(long, value_enum, default_value = "bhattacharya")]
    estimator: EstimatorChoice,
    #[arg(long, value_parser = parse_real)]
    a0: f64,
    #[arg(long, value_parser = parse_real)]
    a1: f64,
    #[arg(long, value_parser = parse_real)]
    kn: f64,
    /// Simpson nodes (odd).
    #[arg(long, default_value_t = 2001, value_parser = parse_count)]
    grid: usize,
    #[arg(long, value_parser = parse_real)]
    floor: Option<f64>,
    /// Clip envelope: `lemma1` or `const:<value>`.
    #[arg(long)]
    rho_bar: Option<String>,
    /// Var(X) for the lemma1 envelope when reading samples from a file.
    #[arg(long, value_parser = parse_real)]
    var: Option<f64>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[command(flatten)]
    source: SampleSource,
    /// Bandwidth for both f_n and f_n'.
    #[arg(long, value_parser = parse_real)]
    a: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    a0: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    a1: Option<f64>,
    /// `lo:hi`.
    #[arg(long, default_value = "-6:6", allow_hyphen_values = true)]
    grid_range: String,
    #[arg(long, default_value_t = 601, value_parser = parse_count)]
    grid_points: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MomentArgs {
    #[arg(long, default_value_t = 1.0, value_parser = parse_real)]
    snr: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_real)]
    var: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_real)]
    ex2: f64,
    /// Sub-Gaussian proxy of |X|; enables the sub-Gaussian forms.
    #[arg(long, value_parser = parse_real)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=6))]
    theorem: u8,
    #[command(flatten)]
    moments: MomentArgs,
    #[arg(long, value_parser = parse_real)]
    eps0: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    eps1: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    kn: Option<f64>,
    /// Zero count of f' (theorem 3).
    #[arg(long, value_parser = parse_count)]
    d_f: Option<usize>,
    /// Zero count of f_n' (theorem 3).
    #[arg(long, value_parser = parse_count)]
    d_fn: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    n: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    u: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    w: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    w0: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    w1: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodChoice {
    Free,
    Theorem,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MassChoice {
    TwoSided,
    OneSided,
}

#[derive(Args, Debug)]
struct ComplexityArgs {
    #[arg(long, value_parser = parse_real)]
    eps: f64,
    #[arg(long, value_parser = parse_real)]
    perr: f64,
    #[arg(long, value_enum)]
    estimator: EstimatorChoice,
    /// Take moments from a built-in input law (overrides --var/--ex2/--alpha).
    #[arg(long)]
    channel: Option<InputKind>,
    #[command(flatten)]
    moments: MomentArgs,
    #[arg(long, value_enum, default_value = "free")]
    method: MethodChoice,
    #[arg(long, value_enum, default_value = "two-sided")]
    envelope_mass: MassChoice,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::HypothesisViolated(_)
            | Error::Infeasible { .. }
            | Error::Quadrature { .. }
            | Error::DivisionGuard { .. } => 2,
            Error::Io(_) => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Counts accept scientific notation (`1e4`) as long as the value is a
/// nonnegative integer.
fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.trim().parse::<usize>() {
        return Ok(v);
    }
    let v = parse_real(s)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    parse_count(s).map(|v| v as u64)
}

fn channel_model(kind: InputKind, snr: f64) -> ChannelModel {
    match kind {
        InputKind::Gaussian => ChannelModel::gaussian(snr),
        InputKind::Binary => ChannelModel::binary(snr),
    }
}

fn load_samples(src: &SampleSource) -> Result<(SampleSet, Option<ChannelModel>), Failure> {
    match (&src.input, src.channel) {
        (Some(path), None) => Ok((SampleSet::read_from(path)?, None)),
        (None, Some(kind)) => {
            let snr = src.snr.ok_or_else(|| usage("--channel needs --snr"))?;
            let n = src.n.ok_or_else(|| usage("--channel needs --n"))?;
            let model = channel_model(kind, snr);
            Ok((sample_channel(&model, n, src.seed)?, Some(model)))
        }
        _ => Err(usage("give either --input <file> or --channel with --snr and --n")),
    }
}

fn parse_rho_bar(spec: &str, snr: Option<f64>, var: Option<f64>) -> Result<ClipEnvelope, Failure> {
    if spec == "lemma1" {
        let (snr, var) = snr
            .zip(var)
            .ok_or_else(|| usage("--rho-bar lemma1 needs snr and Var(X) (use --channel, or --snr and --var)"))?;
        return Ok(ClipEnvelope::gaussian_channel(snr, var));
    }
    if let Some(v) = spec.strip_prefix("const:") {
        return Ok(ClipEnvelope::constant(parse_real(v).map_err(usage)?));
    }
    Err(usage(format!("unknown --rho-bar `{spec}` (expected lemma1 or const:<value>)")))
}

fn cmd_estimate(args: &EstimateArgs) -> Result<Value, Failure> {
    let (samples, model) = load_samples(&args.source)?;
    let snr = model.as_ref().map(|m| m.snr).or(args.source.snr);
    let mut cfg = EstimatorConfig::new(args.a0, args.a1, args.kn).with_grid_points(args.grid);
    if let Some(f) = args.floor {
        cfg = cfg.with_density_floor(f);
    }
    let result = match args.estimator {
        EstimatorChoice::Bhattacharya => bhattacharya(&samples, &cfg)?,
        EstimatorChoice::Clipped => {
            let envelope = match (&args.rho_bar, &model) {
                (Some(spec), _) => parse_rho_bar(spec, snr, model.as_ref().map(|m| m.variance).or(args.var))?,
                (None, Some(m)) => ClipEnvelope::gaussian_channel(m.snr, m.variance),
                (None, None) => return Err(usage("the clipped estimator needs --rho-bar or a --channel")),
            };
            clipped(&samples, &cfg.with_clip_envelope(envelope))?
        }
    };
    let mut out = json!({
        "estimator": result.estimator.to_string(),
        "value": result.value,
        "clip_active_fraction": result.clip_active_fraction,
        "floored_fraction": result.floored_fraction,
        "n": samples.len(),
        "config": result.config,
    });
    if let Some(snr) = snr {
        out["snr"] = json!(snr);
        out["mmse"] = json!(mmse_from_fisher(result.value, snr)?);
    }
    if let Some(seed) = samples.seed {
        out["seed"] = json!(seed);
    }
    Ok(out)
}

fn parse_range(s: &str) -> Result<(f64, f64), Failure> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| usage(format!("--grid-range `{s}` must look like lo:hi")))?;
    let lo = parse_real(lo).map_err(usage)?;
    let hi = parse_real(hi).map_err(usage)?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(usage("--grid-range needs lo < hi"))
    }
}

fn cmd_density(args: &DensityArgs) -> Result<(Option<String>, Value), Failure> {
    let (samples, model) = load_samples(&args.source)?;
    let a0 = args.a0.or(args.a).ok_or_else(|| usage("density needs --a (or --a0 and --a1)"))?;
    let a1 = args.a1.or(args.a).ok_or_else(|| usage("density needs --a (or --a0 and --a1)"))?;
    let (lo, hi) = parse_range(&args.grid_range)?;
    if args.grid_points < 2 {
        return Err(usage("--grid-points must be at least 2"));
    }
    let grid = uniform_grid(lo, hi, args.grid_points);
    let pairs = kde_pair_on_grid(&samples, a0, a1, &KernelSpec::gaussian(), &grid)?;
    let mut csv = String::new();
    if model.is_some() {
        csv.push_str("# t,f_n,df_n,f,df\n");
    } else {
        csv.push_str("# t,f_n,df_n\n");
    }
    for (&t, &(f, df)) in grid.iter().zip(&pairs) {
        match &model {
            Some(m) => {
                let _ = writeln!(csv, "{t},{f},{df},{},{}", true_density(m, t)?, true_density_deriv(m, t)?);
            }
            None => {
                let _ = writeln!(csv, "{t},{f},{df}");
            }
        }
    }
    let summary = json!({ "rows": grid.len(), "a0": a0, "a1": a1, "n": samples.len() });
    match &args.output {
        Some(path) => {
            std::fs::write(path, csv).map_err(Error::from)?;
            Ok((None, json!({ "rows": grid.len(), "a0": a0, "a1": a1, "n": samples.len(), "output": path })))
        }
        None => Ok((Some(csv), summary)),
    }
}

fn need(v: Option<f64>, flag: &str, theorem: u8) -> Result<f64, Failure> {
    v.ok_or_else(|| usage(format!("theorem {theorem} needs --{flag}")))
}

fn cmd_bounds(args: &BoundsArgs) -> Result<Value, Failure> {
    let m = &args.moments;
    let th = args.theorem;
    let consts = GaussianBoundConstants::new(m.snr, m.var, m.ex2, m.alpha)?;
    let mut out = json!({ "theorem": th, "constants": consts });
    match th {
        2..=4 => {
            let eps0 = need(args.eps0, "eps0", th)?;
            let eps1 = need(args.eps1, "eps1", th)?;
            let kn = need(args.kn, "kn", th)?;
            let tail = TailModel::gaussian_channel(m.snr, m.var, m.ex2, m.alpha)?;
            let l1 = lemma1_constants(m.snr, m.var, m.ex2)?;
            let c = lemma2_tail(kn, m.snr, m.ex2, m.alpha, &VSearch::default())?;
            out["phi_kn"] = json!((tail.phi)(kn));
            out["rho_max_kn"] = json!((tail.rho_max)(kn));
            out["c_kn"] = json!(c);
            out["lemma1"] = json!(l1);
            let bound = match th {
                2 => bhattacharya_error_bound(eps0, eps1, kn, &tail, l1.fisher_upper)?,
                3 => {
                    let d_f = args.d_f.ok_or_else(|| usage("theorem 3 needs --d-f"))?;
                    let d_fn = args.d_fn.ok_or_else(|| usage("theorem 3 needs --d-fn"))?;
                    out["psi"] = json!(psi(eps0, kn, &tail)?);
                    modified_error_bound(eps0, eps1, kn, &tail, &ZeroCount::known(d_f), &ZeroCount::known(d_fn))?
                }
                _ => clipped_error_bound(eps0, eps1, kn, &tail)?,
            };
            out["bound"] = json!(bound);
        }
        _ => {
            let n = need(args.n, "n", th)?;
            let u = need(args.u, "u", th)?;
            let sub_gaussian = m.alpha.is_some();
            let exponents = if th == 5 {
                Exponents::Bhattacharya { u, w: need(args.w, "w", th)? }
            } else {
                Exponents::Clipped { u, w0: need(args.w0, "w0", th)?, w1: need(args.w1, "w1", th)? }
            };
            let eps_n = match exponents {
                Exponents::Bhattacharya { u, w } => theorem5_precision(n, u, w, &consts, sub_gaussian)?,
                Exponents::Clipped { u, w0, w1 } => theorem6_precision(n, u, w0, w1, &consts, sub_gaussian)?,
            };
            out["exponents"] = json!(exponents);
            out["sub_gaussian"] = json!(sub_gaussian);
            out["n"] = json!(n);
            out["eps_n"] = json!(eps_n);
            out["p_err"] = json!(confidence_bound(n, &exponents, &consts)?);
        }
    }
    Ok(out)
}

fn cmd_complexity(args: &ComplexityArgs) -> Result<Value, Failure> {
    let m = &args.moments;
    let base = match args.channel {
        Some(kind) => ComplexitySpec::for_channel(&channel_model(kind, m.snr)),
        None => {
            ComplexitySpec { snr: m.snr, variance: m.var, second_moment: m.ex2, alpha: m.alpha, ..Default::default() }
        }
    };
    let spec = ComplexitySpec {
        method: match args.method {
            MethodChoice::Free => ComplexityMethod::FreeParameters,
            MethodChoice::Theorem => ComplexityMethod::TheoremExponents,
        },
        envelope_mass: match args.envelope_mass {
            MassChoice::TwoSided => EnvelopeMass::TwoSided,
            MassChoice::OneSided => EnvelopeMass::OneSided,
        },
        ..base
    };
    let family = match args.estimator {
        EstimatorChoice::Bhattacharya => EstimatorFamily::Bhattacharya,
        EstimatorChoice::Clipped => EstimatorFamily::Clipped,
    };
    let r = sample_complexity(args.eps, args.perr, family, &spec)?;
    Ok(json!({
        "estimator": family.to_string(),
        "eps": r.eps,
        "p_err": r.p_err,
        "log10_n": r.log10_n,
        "achieved_eps": r.achieved_eps,
        "parameters": r.parameters,
        "spec": spec,
    }))
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<Value, Failure> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let report = experiment_harness::run(&cfg)?;
    let files = experiment_harness::write_outputs(&report)?;
    Ok(json!({ "kind": report.kind, "files": files }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| usage(e.to_string()))?;
    }
    let value = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a)?,
        Command::Density(a) => {
            let (csv, summary) = cmd_density(a)?;
            if let Some(csv) = csv {
                print!("{csv}");
                return Ok(());
            }
            summary
        }
        Command::Bounds(a) => cmd_bounds(a)?,
        Command::Complexity(a) => cmd_complexity(a)?,
        Command::Experiment(a) => cmd_experiment(a)?,
    };
    println!("{}", serde_json::to_string(&value).expect("JSON values always serialize"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
