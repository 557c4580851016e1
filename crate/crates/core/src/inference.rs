//! Confidence interval for the first contribution ratio, the F1/F2/F3
//! equality tests, asymptotic powers and the Jarque-Bera screen.

use serde::Serialize;

use crate::dist::{chi2_cdf, chi2_pdf, chi2_quantile, f_cdf, f_sf, f_upper_point, QuantilePair};
use crate::error::{domain, Error, Result};
use crate::matrix::{dot, norm, MIN_SAMPLES};
use crate::nr::NrEstimate;

/// Smallest `α` accepted by [`optimal_ab`].
pub const MIN_CI_ALPHA: f64 = 1e-6;

/// `|h̃₁₍₁₎ᵀh̃₁₍₂₎|` below this fraction of `‖h̃₁₍₁₎‖‖h̃₁₍₂₎‖` is treated as
/// orthogonal.
pub const ORTHOGONAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiResult {
    pub lower: f64,
    pub upper: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub df: u32,
}

/// χ² quantile pair `(a, b)` with `G(b) - G(a) = 1 - α` minimizing
/// `1/a - 1/b`.
///
/// The search runs over the lower-tail mass `p = G(a) ∈ (0, α)`, with
/// `a = G⁻¹(p)` and `b = G⁻¹(p + 1 - α)`, so the coverage constraint holds
/// by construction. Golden-section search locates the minimum; bisection on
/// the stationarity condition `a²g(a) = b²g(b)` polishes it.
pub fn optimal_ab(df: u32, alpha: f64) -> Result<QuantilePair> {
    if df < 2 {
        return domain(format!("optimal (a, b) needs df >= 2, got {df}"));
    }
    if !(MIN_CI_ALPHA..1.0).contains(&alpha) {
        return domain(format!("CI level alpha must lie in [{MIN_CI_ALPHA:e}, 1), got {alpha}"));
    }
    let k = df as f64;
    let pair_at = |p: f64| -> Result<(f64, f64)> {
        Ok((chi2_quantile(k, p)?, chi2_quantile(k, p + 1.0 - alpha)?))
    };
    let objective = |p: f64| -> Result<f64> {
        let (a, b) = pair_at(p)?;
        Ok(1.0 / a - 1.0 / b)
    };
    let stationarity = |p: f64| -> Result<f64> {
        let (a, b) = pair_at(p)?;
        Ok(a * a * chi2_pdf(k, a)? - b * b * chi2_pdf(k, b)?)
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (alpha * 1e-6, alpha * (1.0 - 1e-6));
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2)?;
        }
    }

    // Stationarity is negative left of the optimum and positive right of it.
    let (mut left, mut right) = (lo, hi);
    if !(stationarity(left)? <= 0.0 && stationarity(right)? >= 0.0) {
        left = alpha * 1e-9;
        right = alpha * (1.0 - 1e-9);
    }
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if mid <= left || mid >= right {
            break;
        }
        if stationarity(mid)? < 0.0 {
            left = mid;
        } else {
            right = mid;
        }
    }
    let (a, b) = pair_at(0.5 * (left + right))?;
    QuantilePair::new(a, b)
}

/// Interval `[(n-1)λ̃₁ / (bκ̃ + (n-1)λ̃₁), (n-1)λ̃₁ / (aκ̃ + (n-1)λ̃₁)]` with
/// the minimum-length `(a, b)` for `χ²_{n-1}`.
pub fn contribution_ci(lambda_tilde_1: f64, kappa_tilde: f64, n: usize, alpha: f64) -> Result<CiResult> {
    if n < MIN_SAMPLES {
        return domain(format!("contribution CI needs n >= {MIN_SAMPLES}, got {n}"));
    }
    if !(lambda_tilde_1 > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "contribution CI needs a positive noise-reduced eigenvalue, got {lambda_tilde_1}"
        )));
    }
    if !(kappa_tilde >= 0.0) || !kappa_tilde.is_finite() {
        return domain(format!("tail mass estimate must be non-negative, got {kappa_tilde}"));
    }
    let df = (n - 1) as u32;
    let QuantilePair { a, b } = optimal_ab(df, alpha)?;
    let scaled = (n as f64 - 1.0) * lambda_tilde_1;
    Ok(CiResult {
        lower: scaled / (b * kappa_tilde + scaled),
        upper: scaled / (a * kappa_tilde + scaled),
        a,
        b,
        alpha,
        df,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    /// `λ₁₍₁₎ < λ₁₍₂₎`; only defined for F1.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    F1,
    F2,
    F3,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::F1, Statistic::F2, Statistic::F3];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::F1 => "f1",
            Statistic::F2 => "f2",
            Statistic::F3 => "f3",
        }
    }
}

/// Pieces a statistic was assembled from; fields not used by a test are
/// `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Components {
    pub lambda_ratio: f64,
    pub h_tilde: Option<f64>,
    pub h_star: Option<f64>,
    pub gamma_tilde: Option<f64>,
    pub gamma_star: Option<f64>,
    /// `‖h̃₁₍₁₎‖` and `‖h̃₁₍₂₎‖`; both exceed 1 and show how far the raw
    /// NR directions are from unit length.
    pub h_tilde_norms: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub test: Statistic,
    pub statistic: f64,
    pub nu1: u32,
    pub nu2: u32,
    pub alpha: f64,
    pub alternative: Alternative,
    pub lower_crit: f64,
    pub upper_crit: Option<f64>,
    pub reject_null: bool,
    pub components: Components,
}

/// Acceptance region `[{F_{ν₂,ν₁}(α/2)}⁻¹, F_{ν₁,ν₂}(α/2)]`. At `α = 0`
/// the region is `[0, ∞]`.
pub fn two_sided_region(nu1: u32, nu2: u32, alpha: f64) -> Result<(f64, f64)> {
    if alpha == 0.0 {
        return Ok((0.0, f64::INFINITY));
    }
    let (v1, v2) = (nu1 as f64, nu2 as f64);
    Ok((1.0 / f_upper_point(v2, v1, alpha / 2.0)?, f_upper_point(v1, v2, alpha / 2.0)?))
}

fn check_test_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return domain(format!("test level alpha must lie in (0, 1/2), got {alpha}"));
    }
    Ok(())
}

fn degrees(n1: usize, n2: usize) -> Result<(u32, u32)> {
    if n1 < MIN_SAMPLES || n2 < MIN_SAMPLES {
        return domain(format!("tests need n >= {MIN_SAMPLES} per sample, got {n1} and {n2}"));
    }
    Ok(((n1 - 1) as u32, (n2 - 1) as u32))
}

fn check_lambda(which: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::DegenerateSpectrum(format!(
            "noise-reduced first eigenvalue of {which} is {v}"
        )));
    }
    Ok(())
}

fn two_sided_outcome(
    test: Statistic,
    statistic: f64,
    nu1: u32,
    nu2: u32,
    alpha: f64,
    components: Components,
) -> Result<TestOutcome> {
    let (lower, upper) = two_sided_region(nu1, nu2, alpha)?;
    Ok(TestOutcome {
        test,
        statistic,
        nu1,
        nu2,
        alpha,
        alternative: Alternative::TwoSided,
        lower_crit: lower,
        upper_crit: Some(upper),
        reject_null: statistic < lower || statistic > upper,
        components,
    })
}

/// Test of `λ₁₍₁₎ = λ₁₍₂₎` with `F₁ = λ̃₁₍₁₎ / λ̃₁₍₂₎`.
pub fn test_f1(
    lt1: f64,
    lt2: f64,
    n1: usize,
    n2: usize,
    alpha: f64,
    alternative: Alternative,
) -> Result<TestOutcome> {
    check_test_alpha(alpha)?;
    check_lambda("sample 1", lt1)?;
    check_lambda("sample 2", lt2)?;
    let (nu1, nu2) = degrees(n1, n2)?;
    let statistic = lt1 / lt2;
    let components = Components { lambda_ratio: statistic, ..Components::default() };
    match alternative {
        Alternative::TwoSided => two_sided_outcome(Statistic::F1, statistic, nu1, nu2, alpha, components),
        Alternative::Less => {
            let lower = 1.0 / f_upper_point(nu2 as f64, nu1 as f64, alpha)?;
            Ok(TestOutcome {
                test: Statistic::F1,
                statistic,
                nu1,
                nu2,
                alpha,
                alternative,
                lower_crit: lower,
                upper_crit: None,
                reject_null: statistic < lower,
                components,
            })
        }
    }
}

/// `h̃ = (|c| + |c|⁻¹)/2` for the raw inner product `c = h̃₁₍₁₎ᵀh̃₁₍₂₎`.
pub fn direction_h(h1: &[f64], h2: &[f64]) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(Error::Dimension(format!(
            "direction vectors have lengths {} and {}",
            h1.len(),
            h2.len()
        )));
    }
    let scale = norm(h1) * norm(h2);
    if !(scale > 0.0) {
        return domain("direction vectors must be nonzero");
    }
    let inner = dot(h1, h2).abs();
    if inner < ORTHOGONAL_TOL * scale {
        return Err(Error::OrthogonalDirections { inner: inner / scale });
    }
    Ok(0.5 * (inner + 1.0 / inner))
}

fn starred(value: f64, first_is_larger: bool) -> f64 {
    if first_is_larger {
        value
    } else {
        1.0 / value
    }
}

fn f2_components(est1: &NrEstimate, est2: &NrEstimate) -> Result<Components> {
    let (lt1, lt2) = (est1.lambda_tilde_1(), est2.lambda_tilde_1());
    check_lambda("sample 1", lt1)?;
    check_lambda("sample 2", lt2)?;
    let h = direction_h(&est1.h_tilde_1, &est2.h_tilde_1)?;
    Ok(Components {
        lambda_ratio: lt1 / lt2,
        h_tilde: Some(h),
        h_star: Some(starred(h, lt1 >= lt2)),
        gamma_tilde: None,
        gamma_star: None,
        h_tilde_norms: Some([norm(&est1.h_tilde_1), norm(&est2.h_tilde_1)]),
    })
}

/// Test of `(λ₁₍₁₎, h₁₍₁₎) = (λ₁₍₂₎, h₁₍₂₎)` with `F₂ = (λ̃₁₍₁₎/λ̃₁₍₂₎) h̃⋆`.
pub fn test_f2(est1: &NrEstimate, est2: &NrEstimate, alpha: f64) -> Result<TestOutcome> {
    check_test_alpha(alpha)?;
    let (nu1, nu2) = degrees(est1.n, est2.n)?;
    let c = f2_components(est1, est2)?;
    let statistic = c.lambda_ratio * c.h_star.unwrap_or(1.0);
    two_sided_outcome(Statistic::F2, statistic, nu1, nu2, alpha, c)
}

fn f3_components(est1: &NrEstimate, est2: &NrEstimate) -> Result<Components> {
    let mut c = f2_components(est1, est2)?;
    let (k1, k2) = (est1.kappa_tilde, est2.kappa_tilde);
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "tail mass estimates must be positive, got {k1} and {k2}"
        )));
    }
    let gamma = (k1 / k2).max(k2 / k1);
    c.gamma_tilde = Some(gamma);
    c.gamma_star = Some(starred(gamma, est1.lambda_tilde_1() >= est2.lambda_tilde_1()));
    Ok(c)
}

/// Test of `Σ₁ = Σ₂` with `F₃ = (λ̃₁₍₁₎/λ̃₁₍₂₎) h̃⋆ γ̃⋆`.
pub fn test_f3(est1: &NrEstimate, est2: &NrEstimate, alpha: f64) -> Result<TestOutcome> {
    check_test_alpha(alpha)?;
    let (nu1, nu2) = degrees(est1.n, est2.n)?;
    let c = f3_components(est1, est2)?;
    let statistic = c.lambda_ratio * c.h_star.unwrap_or(1.0) * c.gamma_star.unwrap_or(1.0);
    two_sided_outcome(Statistic::F3, statistic, nu1, nu2, alpha, c)
}

/// The three statistics for a pair of estimates, without a decision. `F2`
/// and `F3` are `None` when the directions are numerically orthogonal.
pub fn statistics(est1: &NrEstimate, est2: &NrEstimate) -> Result<[Option<f64>; 3]> {
    let (lt1, lt2) = (est1.lambda_tilde_1(), est2.lambda_tilde_1());
    check_lambda("sample 1", lt1)?;
    check_lambda("sample 2", lt2)?;
    let f1 = lt1 / lt2;
    match f3_components(est1, est2) {
        Ok(c) => {
            let f2 = f1 * c.h_star.unwrap_or(1.0);
            Ok([Some(f1), Some(f2), Some(f2 * c.gamma_star.unwrap_or(1.0))])
        }
        Err(Error::OrthogonalDirections { .. }) => Ok([Some(f1), None, None]),
        Err(e) => Err(e),
    }
}

/// Limiting rejection probability `P(c·f ∉ region)` for `f ~ F_{ν₁,ν₂}`,
/// where `c` is `ratio`, `ratio/h` or `ratio/(hγ)` for F1, F2, F3.
pub fn asymptotic_power(
    nu1: u32,
    nu2: u32,
    lambda_ratio: f64,
    h: f64,
    gamma: f64,
    alpha: f64,
    which: Statistic,
) -> Result<f64> {
    if nu1 == 0 || nu2 == 0 {
        return domain("degrees of freedom must be positive");
    }
    if !(lambda_ratio > 0.0 && lambda_ratio.is_finite()) {
        return domain(format!("eigenvalue ratio must be positive, got {lambda_ratio}"));
    }
    if !(h >= 1.0 && gamma >= 1.0) {
        return domain(format!("h and gamma must be >= 1, got h={h}, gamma={gamma}"));
    }
    check_test_alpha(alpha)?;
    let c = match which {
        Statistic::F1 => lambda_ratio,
        Statistic::F2 => lambda_ratio / h,
        Statistic::F3 => lambda_ratio / (h * gamma),
    };
    let (lower, upper) = two_sided_region(nu1, nu2, alpha)?;
    let (v1, v2) = (nu1 as f64, nu2 as f64);
    Ok(f_cdf(v1, v2, lower / c)? + f_sf(v1, v2, upper / c)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JarqueBera {
    pub statistic: f64,
    pub p_value: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// `JB = n/6 (S² + (K - 3)²/4)` with moment-based skewness and kurtosis;
/// the p-value is the `χ²₂` upper tail `e^{-JB/2}`.
pub fn jarque_bera(values: &[f64]) -> Result<JarqueBera> {
    let n = values.len();
    if n < 8 {
        return domain(format!("Jarque-Bera needs at least 8 values, got {n}"));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let c = v - mean;
        let c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if !(m2 > 0.0) {
        return domain("Jarque-Bera needs non-constant values");
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let statistic = nf / 6.0 * (skewness * skewness + 0.25 * (kurtosis - 3.0).powi(2));
    Ok(JarqueBera { statistic, p_value: (-statistic / 2.0).exp(), skewness, kurtosis })
}

/// Coverage check used by tests: `G(b) - G(a)`.
pub fn pair_coverage(df: u32, pair: QuantilePair) -> Result<f64> {
    Ok(chi2_cdf(df as f64, pair.b)? - chi2_cdf(df as f64, pair.a)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{chi2_sf, PolarNormal, Seed};
    use crate::matrix::DataMatrix;
    use proptest::prelude::*;

    #[test]
    fn optimal_ab_constraint_and_stationarity() {
        for &(df, alpha) in &[(19u32, 0.05), (23, 0.05), (9, 0.1), (2, 0.05), (60, 0.01)] {
            let pair = optimal_ab(df, alpha).unwrap();
            let cov = pair_coverage(df, pair).unwrap();
            assert!((cov - (1.0 - alpha)).abs() < 1e-8, "df={df}: coverage {cov}");
            let k = df as f64;
            let ga = pair.a * pair.a * chi2_pdf(k, pair.a).unwrap();
            let gb = pair.b * pair.b * chi2_pdf(k, pair.b).unwrap();
            assert!((ga - gb).abs() <= 1e-6 * ga, "df={df}: {ga} vs {gb}");
        }
    }

    #[test]
    fn optimal_ab_beats_local_perturbations() {
        let (df, alpha) = (19u32, 0.05);
        let k = df as f64;
        let pair = optimal_ab(df, alpha).unwrap();
        let best = 1.0 / pair.a - 1.0 / pair.b;
        for factor in [0.99, 1.01] {
            let a = pair.a * factor;
            let b = chi2_quantile(k, chi2_cdf(k, a).unwrap() + 1.0 - alpha).unwrap();
            assert!(best < 1.0 / a - 1.0 / b);
        }
        // the equal-tailed pair is longer
        let a = chi2_quantile(k, 0.025).unwrap();
        let b = chi2_quantile(k, 0.975).unwrap();
        assert!(best < 1.0 / a - 1.0 / b);
    }

    #[test]
    fn optimal_ab_domain() {
        assert!(optimal_ab(1, 0.05).is_err());
        assert!(optimal_ab(10, 1e-7).is_err());
        assert!(optimal_ab(10, 1.0).is_err());
    }

    #[test]
    fn table_one_intervals() {
        let mll = contribution_ci(2717.0, 9865.0, 20, 0.05).unwrap();
        assert!((mll.lower - 0.1201).abs() < 5e-5, "{mll:?}");
        assert!((mll.upper - 0.3458).abs() < 5e-5, "{mll:?}");
        let all = contribution_ci(1256.0, 11326.0, 24, 0.05).unwrap();
        assert!((all.lower - 0.0557).abs() < 5e-5, "{all:?}");
        assert!((all.upper - 0.1663).abs() < 5e-5, "{all:?}");
        let aml = contribution_ci(1501.0, 11081.0, 28, 0.05).unwrap();
        assert!((aml.lower - 0.0706).abs() < 5e-5, "{aml:?}");
        assert!((aml.upper - 0.1884).abs() < 5e-5, "{aml:?}");
    }

    #[test]
    fn ci_degenerate_cases() {
        let ci = contribution_ci(5.0, 0.0, 10, 0.05).unwrap();
        assert_eq!((ci.lower, ci.upper), (1.0, 1.0));
        assert!(matches!(contribution_ci(0.0, 1.0, 10, 0.05), Err(Error::DegenerateSpectrum(_))));
        assert!(contribution_ci(1.0, -1.0, 10, 0.05).is_err());
    }

    #[test]
    fn f1_equal_eigenvalues_never_rejected() {
        for &alpha in &[0.01, 0.05, 0.2, 0.49] {
            let out = test_f1(3.0, 3.0, 10, 20, alpha, Alternative::TwoSided).unwrap();
            assert_eq!(out.statistic, 1.0);
            assert!(out.lower_crit < 1.0 && out.upper_crit.unwrap() > 1.0);
            assert!(!out.reject_null);
        }
    }

    #[test]
    fn f1_one_sided_rule() {
        let out = test_f1(1.0, 10.0, 10, 20, 0.05, Alternative::Less).unwrap();
        assert!(out.upper_crit.is_none());
        assert!(out.reject_null);
        let expected = 1.0 / f_upper_point(19.0, 9.0, 0.05).unwrap();
        assert_eq!(out.lower_crit, expected);
        assert!(!test_f1(10.0, 1.0, 10, 20, 0.05, Alternative::Less).unwrap().reject_null);
    }

    #[test]
    fn f1_validation() {
        assert!(test_f1(1.0, 1.0, 10, 20, 0.5, Alternative::TwoSided).is_err());
        assert!(test_f1(1.0, 1.0, 10, 20, 0.0, Alternative::TwoSided).is_err());
        assert!(matches!(
            test_f1(0.0, 1.0, 10, 20, 0.05, Alternative::TwoSided),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert!(test_f1(1.0, 1.0, 2, 20, 0.05, Alternative::TwoSided).is_err());
    }

    #[test]
    fn direction_h_values() {
        let e1 = [1.0, 0.0, 0.0];
        assert_eq!(direction_h(&e1, &e1).unwrap(), 1.0);
        let third = [1.0 / 3.0, 8f64.sqrt() / 3.0, 0.0];
        assert!((direction_h(&e1, &third).unwrap() - 5.0 / 3.0).abs() < 1e-14);
        let neg: Vec<f64> = third.iter().map(|x| -x).collect();
        assert!((direction_h(&e1, &neg).unwrap() - 5.0 / 3.0).abs() < 1e-14);
        // x and 1/x give the same value
        let big = [3.0, 0.0, 0.0];
        assert!((direction_h(&e1, &big).unwrap() - 5.0 / 3.0).abs() < 1e-14);
        let err = direction_h(&e1, &[0.0, 1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OrthogonalDirections { .. }));
        assert!(direction_h(&e1, &[0.0; 3]).is_err());
    }

    #[test]
    fn asymptotic_powers_reported_values() {
        let p1 = asymptotic_power(9, 19, 1.0 / 3.0, 5.0 / 3.0, 1.5, 0.05, Statistic::F1).unwrap();
        let p2 = asymptotic_power(9, 19, 1.0 / 3.0, 5.0 / 3.0, 1.5, 0.05, Statistic::F2).unwrap();
        let p3 = asymptotic_power(9, 19, 1.0 / 3.0, 5.0 / 3.0, 1.5, 0.05, Statistic::F3).unwrap();
        assert!((p1 - 0.39).abs() < 0.005, "{p1}");
        assert!((p2 - 0.726).abs() < 0.0005, "{p2}");
        assert!((p3 - 0.908).abs() < 0.0005, "{p3}");
    }

    #[test]
    fn null_parameters_give_size() {
        for &alpha in &[0.01, 0.05, 0.2] {
            for which in Statistic::ALL {
                let p = asymptotic_power(9, 19, 1.0, 1.0, 1.0, alpha, which).unwrap();
                assert!((p - alpha).abs() < 1e-9, "{p}");
            }
        }
    }

    #[test]
    fn jarque_bera_cases() {
        // symmetric, with m4/m2² = 3: values ±a (weight 1/6 each) and 0 (2/3)
        let v = [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let jb = jarque_bera(&v).unwrap();
        assert!(jb.statistic.abs() < 1e-12);
        assert!((jb.p_value - 1.0).abs() < 1e-12);
        let skewed = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0];
        let jb = jarque_bera(&skewed).unwrap();
        assert!((jb.p_value - chi2_sf(2.0, jb.statistic).unwrap()).abs() < 1e-12);
        assert!(jarque_bera(&[1.0; 8]).is_err());
        assert!(jarque_bera(&[1.0, 2.0, 3.0]).is_err());
    }

    fn gaussian_matrix(d: usize, n: usize, seed: u64, spike: f64) -> DataMatrix {
        let mut rng = Seed(seed).rng();
        let mut normal = PolarNormal::new();
        let mut values = vec![0.0; d * n];
        normal.fill(&mut rng, &mut values);
        for j in 0..n {
            values[j * d] *= spike;
        }
        DataMatrix::from_column_major(d, n, values).unwrap()
    }

    #[test]
    fn identical_estimates_use_raw_direction_norms() {
        let est = NrEstimate::fit(&gaussian_matrix(200, 10, 1, 20.0)).unwrap();
        let f2 = test_f2(&est, &est, 0.05).unwrap();
        let f3 = test_f3(&est, &est, 0.05).unwrap();
        // h̃ uses the raw (non-unit) vectors, so it is ‖h̃₁‖²-based, not 1
        let c = est.h_tilde_norm_sq();
        let h = 0.5 * (c + 1.0 / c);
        assert!((f2.statistic - h).abs() < 1e-12);
        assert_eq!(f3.components.gamma_tilde, Some(1.0));
        assert!(f3.components.h_tilde.unwrap() >= 1.0);
        assert!(!f2.reject_null && !f3.reject_null);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn swap_symmetry(seed in any::<u64>(), spike1 in 5.0f64..40.0, spike2 in 5.0f64..40.0, alpha in 0.01f64..0.3) {
            let e1 = NrEstimate::fit(&gaussian_matrix(120, 8, seed, spike1)).unwrap();
            let e2 = NrEstimate::fit(&gaussian_matrix(120, 12, seed ^ 0xABCD, spike2)).unwrap();
            prop_assume!(e1.lambda_tilde_1() != e2.lambda_tilde_1());
            let pairs = [
                (test_f1(e1.lambda_tilde_1(), e2.lambda_tilde_1(), 8, 12, alpha, Alternative::TwoSided).unwrap(),
                 test_f1(e2.lambda_tilde_1(), e1.lambda_tilde_1(), 12, 8, alpha, Alternative::TwoSided).unwrap()),
                (test_f2(&e1, &e2, alpha).unwrap(), test_f2(&e2, &e1, alpha).unwrap()),
                (test_f3(&e1, &e2, alpha).unwrap(), test_f3(&e2, &e1, alpha).unwrap()),
            ];
            for (a, b) in pairs {
                prop_assert!((a.statistic * b.statistic - 1.0).abs() < 1e-12);
                prop_assert_eq!(a.reject_null, b.reject_null);
                prop_assert!((a.lower_crit * b.upper_crit.unwrap() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn ci_monotone_in_lambda(lt in 1.0f64..1e4, dl in 1.0f64..1e3, kt in 1.0f64..1e5) {
            let a = contribution_ci(lt, kt, 15, 0.05).unwrap();
            let b = contribution_ci(lt + dl, kt, 15, 0.05).unwrap();
            prop_assert!(a.lower < b.lower && a.upper < b.upper);
            prop_assert!(0.0 < a.lower && a.lower < a.upper && a.upper <= 1.0);
        }

        #[test]
        fn gamma_and_h_at_least_one(x in 1e-3f64..1e3) {
            let h = direction_h(&[1.0, 0.0], &[x, 1.0]).unwrap();
            prop_assert!(h >= 1.0);
        }
    }
}
