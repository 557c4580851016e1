//! `nrpca` command-line front end.
//!
//! [`run`] turns parsed arguments into the exact bytes the binary prints,
//! which keeps the handlers testable without spawning processes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nrpca_core::inference::Statistic;
use nrpca_core::{
    asymptotic_power, contribution_ci, jarque_bera, run_estimation_mc, run_test_mc, test_f1, test_f2, test_f3,
    Alternative, CiResult, DataMatrix, JarqueBera, McSummary, Model, Moments, NrEstimate, Seed, TestOutcome,
};
use serde::Serialize;
use serde_json::Value;

pub use io::{load_matrix, parse_matrix, save_matrix, standardize_rows};

/// Environment variable that sets the simulation worker count.
pub const THREADS_ENV: &str = "NRPCA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nrpca", version, about = "Noise-reduction PCA for high-dimension, low-sample-size data")]
pub struct Cli {
    /// Output format; `simulate` defaults to csv, every other command to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// NR estimates of the first eigenvalue, direction and scores.
    Estimate(EstimateArgs),
    /// Confidence interval for the first contribution ratio.
    Ci(CiArgs),
    /// Two-sample covariance equality test.
    Test(TestArgs),
    /// Monte Carlo study of the estimators or the tests.
    Simulate(SimulateArgs),
    /// Limiting power of F1, F2 and F3.
    Power(PowerArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MatrixOpts {
    /// Scale every variable to unit sample variance before fitting.
    #[arg(long)]
    pub standardize: bool,
    /// Input has samples in rows and variables in columns.
    #[arg(long)]
    pub transpose: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV with variables in rows and samples in columns.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub matrix: MatrixOpts,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[arg(long, conflicts_with_all = ["lambda_tilde", "kappa_tilde", "n"])]
    pub input: Option<PathBuf>,
    #[arg(long, requires_all = ["kappa_tilde", "n"])]
    pub lambda_tilde: Option<f64>,
    #[arg(long, requires_all = ["lambda_tilde", "n"])]
    pub kappa_tilde: Option<f64>,
    #[arg(long, requires_all = ["lambda_tilde", "kappa_tilde"])]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub matrix: MatrixOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    F1,
    F2,
    F3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlternativeArg {
    TwoSided,
    /// λ₁ of the first population is smaller (F1 only).
    Less,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub input1: PathBuf,
    #[arg(long)]
    pub input2: PathBuf,
    #[arg(long, value_enum, default_value = "f3")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "two-sided")]
    pub alternative: AlternativeArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub matrix: MatrixOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Estimation,
    Tests,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    A,
    B,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "estimation")]
    pub study: Study,
    #[arg(long, value_enum, default_value = "a")]
    pub model: ModelArg,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub d: Vec<usize>,
    /// Sample size for the estimation study.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub n1: usize,
    #[arg(long, default_value_t = 20)]
    pub n2: usize,
    /// Replications per dimension; the tests study splits them evenly
    /// between the null and the alternative.
    #[arg(long = "R", default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = Seed::DEFAULT.0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long)]
    pub nu1: u32,
    #[arg(long)]
    pub nu2: u32,
    /// λ₁₍₁₎ / λ₁₍₂₎
    #[arg(long)]
    pub ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub d: usize,
    pub n: usize,
    pub standardized: bool,
    pub lambda_tilde_1: f64,
    pub lambda_hat_1: f64,
    pub kappa_tilde: f64,
    pub trace: f64,
    pub contribution_ratio: f64,
    pub h_tilde_norm_sq: f64,
    pub lambda_tilde: Vec<f64>,
    pub scores_tilde: Vec<f64>,
    pub scores_hat: Vec<f64>,
    /// Normality check on the first dual eigenvector; needs `n >= 8`.
    pub jarque_bera: Option<JarqueBera>,
}

#[derive(Debug, Serialize)]
pub struct CiReport {
    pub lambda_tilde_1: f64,
    pub kappa_tilde: f64,
    pub n: usize,
    pub ci: CiResult,
}

#[derive(Debug, Serialize)]
pub struct TestReport {
    pub n1: usize,
    pub n2: usize,
    pub outcome: TestOutcome,
}

#[derive(Debug, Serialize)]
pub struct PowerValues {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

#[derive(Debug, Serialize)]
pub struct PowerReport {
    pub nu1: u32,
    pub nu2: u32,
    pub ratio: f64,
    pub h: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub power: PowerValues,
    /// Powers rounded to three decimals.
    pub rounded: PowerValues,
}

fn read_input(path: &Path, opts: &MatrixOpts) -> Result<DataMatrix> {
    let mut x = load_matrix(path)?;
    if opts.transpose {
        x = x.transpose()?;
    }
    if opts.standardize {
        x = standardize_rows(&x).with_context(|| format!("standardizing {}", path.display()))?;
    }
    Ok(x)
}

fn fit(path: &Path, opts: &MatrixOpts) -> Result<NrEstimate> {
    let x = read_input(path, opts)?;
    NrEstimate::fit(&x).with_context(|| format!("fitting {}", path.display()))
}

pub fn estimate(args: &EstimateArgs) -> Result<EstimateReport> {
    let est = fit(&args.input, &args.matrix)?;
    let jarque_bera = if est.n >= 8 { Some(jarque_bera(&est.u_hat_1)?) } else { None };
    Ok(EstimateReport {
        d: est.d,
        n: est.n,
        standardized: args.matrix.standardize,
        lambda_tilde_1: est.lambda_tilde_1(),
        lambda_hat_1: est.lambda_hat_1(),
        kappa_tilde: est.kappa_tilde,
        trace: est.trace_dual,
        contribution_ratio: est.contribution_ratio()?,
        h_tilde_norm_sq: est.h_tilde_norm_sq(),
        lambda_tilde: est.lambda_tilde.clone(),
        scores_tilde: est.scores_tilde.clone(),
        scores_hat: est.scores_hat.clone(),
        jarque_bera,
    })
}

pub fn ci(args: &CiArgs) -> Result<CiReport> {
    let (lambda_tilde_1, kappa_tilde, n) = match (&args.input, args.lambda_tilde, args.kappa_tilde, args.n) {
        (Some(path), ..) => {
            let est = fit(path, &args.matrix)?;
            (est.lambda_tilde_1(), est.kappa_tilde, est.n)
        }
        (None, Some(l), Some(k), Some(n)) => (l, k, n),
        _ => bail!("ci needs either --input or all of --lambda-tilde, --kappa-tilde and --n"),
    };
    let ci = contribution_ci(lambda_tilde_1, kappa_tilde, n, args.alpha)
        .with_context(|| format!("--alpha {}", args.alpha))?;
    Ok(CiReport { lambda_tilde_1, kappa_tilde, n, ci })
}

pub fn test(args: &TestArgs) -> Result<TestReport> {
    let e1 = fit(&args.input1, &args.matrix)?;
    let e2 = fit(&args.input2, &args.matrix)?;
    let alternative = match args.alternative {
        AlternativeArg::TwoSided => Alternative::TwoSided,
        AlternativeArg::Less => Alternative::Less,
    };
    if alternative == Alternative::Less && args.mode != Mode::F1 {
        bail!("--alternative less is only defined for --mode f1");
    }
    let outcome = match args.mode {
        Mode::F1 => test_f1(e1.lambda_tilde_1(), e2.lambda_tilde_1(), e1.n, e2.n, args.alpha, alternative),
        Mode::F2 => test_f2(&e1, &e2, args.alpha),
        Mode::F3 => test_f3(&e1, &e2, args.alpha),
    }
    .with_context(|| format!("--mode {:?} --alpha {}", args.mode, args.alpha))?;
    Ok(TestReport { n1: e1.n, n2: e2.n, outcome })
}

pub fn simulate(args: &SimulateArgs) -> Result<McSummary> {
    let seed = Seed(args.seed);
    let work = || match args.study {
        Study::Estimation => {
            let model = match args.model {
                ModelArg::A => Model::A,
                ModelArg::B => Model::B,
            };
            run_estimation_mc(model, &args.d, args.n, args.reps, seed)
        }
        Study::Tests => run_test_mc(&args.d, args.n1, args.n2, args.reps, args.alpha, seed),
    };
    let summary = match args.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building the worker pool")?
            .install(work),
        None => work(),
    };
    Ok(summary?)
}

pub fn power(args: &PowerArgs) -> Result<PowerReport> {
    let p = |s| asymptotic_power(args.nu1, args.nu2, args.ratio, args.h, args.gamma, args.alpha, s);
    let power = PowerValues { f1: p(Statistic::F1)?, f2: p(Statistic::F2)?, f3: p(Statistic::F3)? };
    let r = |v: f64| (v * 1000.0).round() / 1000.0;
    let rounded = PowerValues { f1: r(power.f1), f2: r(power.f2), f3: r(power.f3) };
    Ok(PowerReport {
        nu1: args.nu1,
        nu2: args.nu2,
        ratio: args.ratio,
        h: args.h,
        gamma: args.gamma,
        alpha: args.alpha,
        power,
        rounded,
    })
}

/// Executes the command and renders its output.
pub fn run(cli: &Cli) -> Result<String> {
    let default = match cli.command {
        Command::Simulate(_) => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.unwrap_or(default);
    match &cli.command {
        Command::Estimate(a) => render(&estimate(a)?, format),
        Command::Ci(a) => render(&ci(a)?, format),
        Command::Test(a) => render(&test(a)?, format),
        Command::Power(a) => render(&power(a)?, format),
        Command::Simulate(a) => {
            let summary = simulate(a)?;
            match format {
                Format::Json => to_json(&summary),
                Format::Csv => summary_csv(&summary),
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn render<T: Serialize>(value: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(value),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &serde_json::to_value(value)?, &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["field", "value"])?;
            for (k, v) in rows {
                w.write_record([k, v])?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
    }
}

/// Dotted-path `(field, value)` pairs; array elements use their index.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// One row per dimension, plot-ready.
pub fn summary_csv(summary: &McSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let moments = |name: &str, cols: &mut Vec<String>| {
        for s in ["mean", "var", "se"] {
            cols.push(format!("{name}_{s}"));
        }
    };
    let push = |m: &Moments, row: &mut Vec<String>| {
        row.extend([m.mean, m.var, m.se].map(|v| v.to_string()));
    };
    if !summary.estimation.is_empty() {
        let names = [
            "lambda_tilde",
            "lambda_hat",
            "lambda_hat_debiased",
            "h_tilde_inner",
            "h_hat_inner",
            "mse_tilde",
            "mse_hat",
        ];
        let mut header: Vec<String> = ["model", "d", "n", "reps", "seed", "lambda1", "kappa"].map(String::from).into();
        names.iter().for_each(|n| moments(n, &mut header));
        header.extend(["ks_chi2_stat", "ks_chi2_p"].map(String::from));
        w.write_record(&header)?;
        for r in &summary.estimation {
            let mut row = vec![
                r.model.name().to_string(),
                r.d.to_string(),
                r.n.to_string(),
                r.reps.to_string(),
                summary.seed.0.to_string(),
                r.lambda1.to_string(),
                r.kappa.to_string(),
            ];
            for m in [
                &r.lambda_tilde,
                &r.lambda_hat,
                &r.lambda_hat_debiased,
                &r.h_tilde_inner,
                &r.h_hat_inner,
                &r.mse_tilde,
                &r.mse_hat,
            ] {
                push(m, &mut row);
            }
            row.extend([r.ks_chi2.statistic, r.ks_chi2.p_value].map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    if !summary.tests.is_empty() {
        let mut header: Vec<String> = ["d", "n1", "n2", "reps", "seed", "alpha"].map(String::from).into();
        for kind in ["size", "power"] {
            for s in Statistic::ALL {
                header.push(format!("{kind}_{}", s.name()));
                header.push(format!("{kind}_{}_se", s.name()));
            }
        }
        header.extend(["ks_f1_null_stat", "ks_f1_null_p"].map(String::from));
        w.write_record(&header)?;
        for r in &summary.tests {
            let mut row = vec![
                r.d.to_string(),
                r.n1.to_string(),
                r.n2.to_string(),
                r.reps.to_string(),
                summary.seed.0.to_string(),
                r.alpha.to_string(),
            ];
            for rate in r.size.iter().chain(&r.power) {
                row.push(rate.rate.to_string());
                row.push(rate.se.to_string());
            }
            row.extend([r.ks_f1_null.statistic, r.ks_f1_null.p_value].map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Runs the command and writes its output to `--out` or stdout.
pub fn execute(cli: &Cli) -> Result<()> {
    let text = run(cli)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("--out {}", path.display()))?,
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

