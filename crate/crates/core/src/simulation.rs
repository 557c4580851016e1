//! Spiked-model and two-sample data generators, and the Monte Carlo
//! harness that summarizes estimator accuracy and test size/power.
//!
//! Every replication draws from its own substream keyed by
//! `(seed, study, parameters, replication)`, and results are reduced in
//! replication order, so a summary is bit-identical for any number of
//! rayon workers.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{chi2_cdf, f_cdf, ks_test, KsResult, PolarNormal, Seed};
use crate::error::{domain, Result};
use crate::inference::{statistics, two_sided_region, Statistic};
use crate::matrix::{dot, DataMatrix, MIN_SAMPLES};
use crate::nr::{score_mse, NrEstimate};

/// Degrees of freedom of the t block in the spiked scenarios.
pub const T_BLOCK_DF: u32 = 10;
/// AR(1) coefficient of the two-sample tail block.
pub const AR1_RHO: f64 = 0.3;

const STREAM_ESTIMATION: u64 = 1;
const STREAM_TESTS: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `λᵢ = d^{1/i}`
    A,
    /// `λᵢ = d^{3/(2+2i)}`
    B,
}

impl Model {
    /// Population eigenvalue `λᵢ` (1-based `i`).
    pub fn eigenvalue(self, d: usize, i: usize) -> f64 {
        let d = d as f64;
        let i = i as f64;
        match self {
            Model::A => d.powf(1.0 / i),
            Model::B => d.powf(3.0 / (2.0 + 2.0 * i)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::A => "a",
            Model::B => "b",
        }
    }

    fn code(self) -> u64 {
        match self {
            Model::A => 0,
            Model::B => 1,
        }
    }
}

/// Size `⌈√d⌉` of the t-distributed block.
pub fn t_block_size(d: usize) -> usize {
    let mut k = (d as f64).sqrt().floor() as usize;
    while k * k < d {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeScenario {
    pub model: Model,
    pub d: usize,
    pub n: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone)]
pub struct SpikedSample {
    pub x: DataMatrix,
    pub lambda1: f64,
    /// `tr(Σ) - λ₁`
    pub kappa: f64,
    pub h1: Vec<f64>,
    pub true_scores: Vec<f64>,
}

/// Draws `X = Λ^{1/2} Z` with `H = I`: the leading `d - d★` coordinates of
/// each column are i.i.d. N(0,1) and the last `d★ = ⌈√d⌉` form a scaled t
/// vector with 10 degrees of freedom and identity covariance.
pub fn gen_spiked<R: RngCore + ?Sized>(scenario: &SpikeScenario, rng: &mut R) -> Result<SpikedSample> {
    let SpikeScenario { model, d, n, .. } = *scenario;
    if d < 4 {
        return domain(format!("spiked scenario needs d >= 4, got {d}"));
    }
    if n < MIN_SAMPLES {
        return domain(format!("spiked scenario needs n >= {MIN_SAMPLES}, got {n}"));
    }
    let sqrt_lambda: Vec<f64> = (1..=d).map(|i| model.eigenvalue(d, i).sqrt()).collect();
    let t_start = d - t_block_size(d);
    let mut normal = PolarNormal::new();
    let mut values = vec![0.0; d * n];
    let mut true_scores = Vec::with_capacity(n);
    for col in values.chunks_exact_mut(d) {
        normal.fill(rng, &mut col[..t_start]);
        normal.fill_scaled_t(rng, &mut col[t_start..], T_BLOCK_DF);
        true_scores.push(sqrt_lambda[0] * col[0]);
        for (x, s) in col.iter_mut().zip(&sqrt_lambda) {
            *x *= s;
        }
    }
    let lambda1 = model.eigenvalue(d, 1);
    let kappa = (2..=d).map(|i| model.eigenvalue(d, i)).sum();
    let mut h1 = vec![0.0; d];
    h1[0] = 1.0;
    Ok(SpikedSample { x: DataMatrix::from_column_major(d, n, values)?, lambda1, kappa, h1, true_scores })
}

/// Stationary Gaussian AR(1) vector with covariance `scale · ρ^{|s-t|}`.
pub fn gen_ar1<R: RngCore + ?Sized>(d: usize, rho: f64, scale: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = vec![0.0; d];
    fill_ar1(&mut out, rho, scale, rng, &mut PolarNormal::new())?;
    Ok(out)
}

fn fill_ar1<R: RngCore + ?Sized>(
    out: &mut [f64],
    rho: f64,
    scale: f64,
    rng: &mut R,
    normal: &mut PolarNormal,
) -> Result<()> {
    if !(rho.abs() < 1.0) {
        return domain(format!("AR(1) coefficient must satisfy |rho| < 1, got {rho}"));
    }
    if !(scale > 0.0) {
        return domain(format!("AR(1) scale must be positive, got {scale}"));
    }
    let innovation = (scale * (1.0 - rho * rho)).sqrt();
    let mut prev = 0.0;
    for (t, x) in out.iter_mut().enumerate() {
        let e = normal.sample(rng);
        prev = if t == 0 { scale.sqrt() * e } else { rho * prev + innovation * e };
        *x = prev;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H0,
    Ha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSampleScenario {
    pub hypothesis: Hypothesis,
    pub d: usize,
    pub n1: usize,
    pub n2: usize,
    pub seed: Seed,
}

/// Population quantities for population 2 relative to population 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSampleTruth {
    /// `λ₁₍₂₎ / λ₁₍₁₎`
    pub lambda_ratio: f64,
    /// `h₁₍₁₎ᵀh₁₍₂₎`
    pub h_inner: f64,
    /// `κ₂ / κ₁`
    pub kappa_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TwoSample {
    pub x1: DataMatrix,
    pub x2: DataMatrix,
    pub truth: TwoSampleTruth,
}

/// Symmetric orthogonal rotation applied to the spiked block under the
/// alternative; its first column is `h₁₍₂₎` restricted to the block.
pub const ROTATION: [[f64; 2]; 2] = [
    [1.0 / 3.0, 2.0 * std::f64::consts::SQRT_2 / 3.0],
    [2.0 * std::f64::consts::SQRT_2 / 3.0, -1.0 / 3.0],
];

/// Block-diagonal Gaussian populations: a 2x2 spiked block
/// `diag(d^{3/4}, d^{1/2})` next to an AR(1) block with `ρ = 0.3`. Under
/// the alternative the second population's spiked block becomes
/// `R diag(3d^{3/4}, 1.5d^{1/2}) R` and its AR(1) block is scaled by 1.5.
pub fn gen_two_sample<R: RngCore + ?Sized>(scenario: &TwoSampleScenario, rng: &mut R) -> Result<TwoSample> {
    let TwoSampleScenario { hypothesis, d, n1, n2, .. } = *scenario;
    if d < 8 {
        return domain(format!("two-sample scenario needs d >= 8, got {d}"));
    }
    let mut normal = PolarNormal::new();
    let x1 = gen_population(d, n1, false, rng, &mut normal)?;
    let alternative = hypothesis == Hypothesis::Ha;
    let x2 = gen_population(d, n2, alternative, rng, &mut normal)?;
    let truth = if alternative {
        TwoSampleTruth { lambda_ratio: 3.0, h_inner: ROTATION[0][0], kappa_ratio: 1.5 }
    } else {
        TwoSampleTruth { lambda_ratio: 1.0, h_inner: 1.0, kappa_ratio: 1.0 }
    };
    Ok(TwoSample { x1, x2, truth })
}

fn gen_population<R: RngCore + ?Sized>(
    d: usize,
    n: usize,
    alternative: bool,
    rng: &mut R,
    normal: &mut PolarNormal,
) -> Result<DataMatrix> {
    let df = d as f64;
    let (mut s1, mut s2) = (df.powf(0.375), df.powf(0.25));
    let mut tail_scale = 1.0;
    if alternative {
        s1 *= 3f64.sqrt();
        s2 *= 1.5f64.sqrt();
        tail_scale = 1.5;
    }
    let mut values = vec![0.0; d * n];
    for col in values.chunks_exact_mut(d) {
        let g1 = s1 * normal.sample(rng);
        let g2 = s2 * normal.sample(rng);
        if alternative {
            col[0] = ROTATION[0][0] * g1 + ROTATION[0][1] * g2;
            col[1] = ROTATION[1][0] * g1 + ROTATION[1][1] * g2;
        } else {
            col[0] = g1;
            col[1] = g2;
        }
        fill_ar1(&mut col[2..], AR1_RHO, tail_scale, rng, normal)?;
    }
    DataMatrix::from_column_major(d, n, values)
}

/// Mean, unbiased variance and the Monte Carlo standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub se: f64,
}

impl Moments {
    pub fn from_samples(xs: &[f64]) -> Self {
        let r = xs.len() as f64;
        let mean = pairwise_sum(xs) / r;
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if xs.len() > 1 { pairwise_sum(&dev) / (r - 1.0) } else { 0.0 };
        Self { mean, var, se: (var / r).sqrt() }
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Outcome of one estimation replication, every quantity scaled by the
/// truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationDraw {
    /// `λ̃₁ / λ₁`
    pub lambda_tilde: f64,
    /// `λ̂₁ / λ₁`
    pub lambda_hat: f64,
    /// `λ̂₁/λ₁ - κ/((n-1)λ₁)`
    pub lambda_hat_debiased: f64,
    /// `h̃₁ᵀh₁`
    pub h_tilde_inner: f64,
    /// `ĥ₁ᵀh₁`
    pub h_hat_inner: f64,
    /// `MSE(s̃₁) / λ₁`
    pub mse_tilde: f64,
    /// `MSE(ŝ₁) / λ₁`
    pub mse_hat: f64,
}

pub fn estimation_replication(scenario: &SpikeScenario, rep: u64) -> Result<EstimationDraw> {
    let SpikeScenario { model, d, n, seed } = *scenario;
    let mut rng = seed.substream(&[STREAM_ESTIMATION, model.code(), d as u64, n as u64, rep]);
    let sample = gen_spiked(scenario, &mut rng)?;
    let mut est = NrEstimate::fit(&sample.x)?;
    est.align_to(&sample.h1)?;
    let l1 = sample.lambda1;
    let lambda_hat = est.lambda_hat_1() / l1;
    Ok(EstimationDraw {
        lambda_tilde: est.lambda_tilde_1() / l1,
        lambda_hat,
        lambda_hat_debiased: lambda_hat - sample.kappa / ((n as f64 - 1.0) * l1),
        h_tilde_inner: dot(&est.h_tilde_1, &sample.h1),
        h_hat_inner: dot(&est.h_hat_1, &sample.h1),
        mse_tilde: score_mse(&est.scores_tilde, &sample.true_scores)? / l1,
        mse_hat: score_mse(&est.scores_hat, &sample.true_scores)? / l1,
    })
}

/// All `reps` replications for one scenario, in replication order.
pub fn estimation_draws(scenario: &SpikeScenario, reps: usize) -> Result<Vec<EstimationDraw>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| estimation_replication(scenario, r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationRecord {
    pub model: Model,
    pub d: usize,
    pub n: usize,
    pub reps: usize,
    pub lambda1: f64,
    pub kappa: f64,
    pub lambda_tilde: Moments,
    pub lambda_hat: Moments,
    pub lambda_hat_debiased: Moments,
    pub h_tilde_inner: Moments,
    pub h_hat_inner: Moments,
    pub mse_tilde: Moments,
    pub mse_hat: Moments,
    /// KS test of `(n-1)λ̃₁/λ₁` against `χ²_{n-1}`.
    pub ks_chi2: KsResult,
}

impl EstimationRecord {
    pub fn from_draws(scenario: &SpikeScenario, draws: &[EstimationDraw]) -> Result<Self> {
        let SpikeScenario { model, d, n, .. } = *scenario;
        let col = |f: fn(&EstimationDraw) -> f64| -> Vec<f64> { draws.iter().map(f).collect() };
        let df = n as f64 - 1.0;
        let scaled: Vec<f64> = draws.iter().map(|x| df * x.lambda_tilde).collect();
        Ok(Self {
            model,
            d,
            n,
            reps: draws.len(),
            lambda1: model.eigenvalue(d, 1),
            kappa: (2..=d).map(|i| model.eigenvalue(d, i)).sum(),
            lambda_tilde: Moments::from_samples(&col(|x| x.lambda_tilde)),
            lambda_hat: Moments::from_samples(&col(|x| x.lambda_hat)),
            lambda_hat_debiased: Moments::from_samples(&col(|x| x.lambda_hat_debiased)),
            h_tilde_inner: Moments::from_samples(&col(|x| x.h_tilde_inner)),
            h_hat_inner: Moments::from_samples(&col(|x| x.h_hat_inner)),
            mse_tilde: Moments::from_samples(&col(|x| x.mse_tilde)),
            mse_hat: Moments::from_samples(&col(|x| x.mse_hat)),
            ks_chi2: ks_test(&scaled, |x| chi2_cdf(df, x))?,
        })
    }
}

/// Empirical rejection rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub test: Statistic,
    pub rate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRecord {
    pub d: usize,
    pub n1: usize,
    pub n2: usize,
    pub reps: usize,
    pub alpha: f64,
    /// `ᾱ` per statistic from the null half of the replications.
    pub size: Vec<Rate>,
    /// `1 - β̄` per statistic from the alternative half.
    pub power: Vec<Rate>,
    /// KS test of the null F1 draws against `F_{n1-1, n2-1}`.
    pub ks_f1_null: KsResult,
}

/// `[F1, F2, F3]` for one replication; `None` marks numerically
/// orthogonal first directions.
pub fn test_replication(scenario: &TwoSampleScenario, rep: u64) -> Result<[Option<f64>; 3]> {
    let TwoSampleScenario { hypothesis, d, n1, n2, seed } = *scenario;
    let arm = match hypothesis {
        Hypothesis::H0 => 0,
        Hypothesis::Ha => 1,
    };
    let mut rng = seed.substream(&[STREAM_TESTS, d as u64, n1 as u64, n2 as u64, arm, rep]);
    let sample = gen_two_sample(scenario, &mut rng)?;
    let e1 = NrEstimate::fit(&sample.x1)?;
    let e2 = NrEstimate::fit(&sample.x2)?;
    statistics(&e1, &e2)
}

pub fn test_draws(scenario: &TwoSampleScenario, reps: usize) -> Result<Vec<[Option<f64>; 3]>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| test_replication(scenario, r))
        .collect()
}

/// Rejection rates for a set of statistic draws. Orthogonal directions
/// send F2/F3 to 0 or ∞, so they count as rejections.
fn rejection_rates(draws: &[[Option<f64>; 3]], region: (f64, f64)) -> Vec<Rate> {
    let r = draws.len() as f64;
    Statistic::ALL
        .iter()
        .enumerate()
        .map(|(k, &test)| {
            let rejected = draws
                .iter()
                .filter(|s| match s[k] {
                    Some(f) => f < region.0 || f > region.1,
                    None => true,
                })
                .count();
            let rate = rejected as f64 / r;
            Rate { test, rate, se: (rate * (1.0 - rate) / r).sqrt() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub seed: Seed,
    pub reps: usize,
    pub estimation: Vec<EstimationRecord>,
    pub tests: Vec<TestRecord>,
}

/// Estimator accuracy for `model` at each `d`, `reps` replications per `d`.
pub fn run_estimation_mc(model: Model, d_list: &[usize], n: usize, reps: usize, seed: Seed) -> Result<McSummary> {
    if reps < 2 {
        return domain(format!("Monte Carlo needs at least 2 replications, got {reps}"));
    }
    let estimation = d_list
        .iter()
        .map(|&d| {
            let scenario = SpikeScenario { model, d, n, seed };
            EstimationRecord::from_draws(&scenario, &estimation_draws(&scenario, reps)?)
        })
        .collect::<Result<_>>()?;
    Ok(McSummary { seed, reps, estimation, tests: Vec::new() })
}

/// Size and power of F1/F2/F3 at each `d`: the first `reps/2` replications
/// use `Σ₂ = Σ₁`, the rest the alternative covariance. `alpha = 0` is
/// accepted and rejects nothing.
pub fn run_test_mc(
    d_list: &[usize],
    n1: usize,
    n2: usize,
    reps: usize,
    alpha: f64,
    seed: Seed,
) -> Result<McSummary> {
    if reps < 2 || !reps.is_multiple_of(2) {
        return domain(format!("test Monte Carlo needs an even replication count >= 2, got {reps}"));
    }
    if !(0.0..0.5).contains(&alpha) {
        return domain(format!("test level alpha must lie in [0, 1/2), got {alpha}"));
    }
    if n1 < MIN_SAMPLES || n2 < MIN_SAMPLES {
        return domain(format!("sample sizes must be >= {MIN_SAMPLES}, got {n1} and {n2}"));
    }
    let half = reps / 2;
    let (nu1, nu2) = ((n1 - 1) as f64, (n2 - 1) as f64);
    let region = two_sided_region((n1 - 1) as u32, (n2 - 1) as u32, alpha)?;
    let tests = d_list
        .iter()
        .map(|&d| {
            let null = TwoSampleScenario { hypothesis: Hypothesis::H0, d, n1, n2, seed };
            let alt = TwoSampleScenario { hypothesis: Hypothesis::Ha, ..null };
            let null_draws = test_draws(&null, half)?;
            let alt_draws = test_draws(&alt, half)?;
            let f1_null: Vec<f64> = null_draws.iter().filter_map(|s| s[0]).collect();
            Ok(TestRecord {
                d,
                n1,
                n2,
                reps,
                alpha,
                size: rejection_rates(&null_draws, region),
                power: rejection_rates(&alt_draws, region),
                ks_f1_null: ks_test(&f1_null, |x| f_cdf(nu1, nu2, x))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(McSummary { seed, reps, estimation: Vec::new(), tests })
}
