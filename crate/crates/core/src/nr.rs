//! Noise-reduction and conventional estimators of the first principal
//! component: eigenvalues, tail mass, direction, scores.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::matrix::{dot, sym_eigen, DataMatrix, SpectralDecomposition, MIN_SAMPLES};

/// NR eigenvalues `λ̃ᵢ = λ̂ᵢ - (tr(S_D) - Σ_{j≤i} λ̂ⱼ) / (n - 1 - i)` for
/// `i = 1..=n-2`, using the eigenvalue sum as the trace.
pub fn nr_eigenvalues(eig: &SpectralDecomposition, n: usize) -> Result<Vec<f64>> {
    if eig.dim() != n {
        return Err(Error::Dimension(format!(
            "decomposition has dimension {}, expected n = {n}",
            eig.dim()
        )));
    }
    let trace = eig.eigenvalues().iter().sum();
    nr_eigenvalues_from(eig.eigenvalues(), trace, n)
}

pub(crate) fn nr_eigenvalues_from(lambda_hat: &[f64], trace: f64, n: usize) -> Result<Vec<f64>> {
    if n < MIN_SAMPLES {
        return domain(format!("NR eigenvalues need n >= {MIN_SAMPLES}, got {n}"));
    }
    if lambda_hat.len() < n - 1 {
        return Err(Error::Dimension(format!(
            "need {} sample eigenvalues, got {}",
            n - 1,
            lambda_hat.len()
        )));
    }
    let floor = -1e-14 * trace.abs();
    let mut partial = 0.0;
    Ok((1..=n - 2)
        .map(|i| {
            let lam = lambda_hat[i - 1];
            partial += lam;
            let v = lam - (trace - partial) / (n - 1 - i) as f64;
            if v < 0.0 && v >= floor {
                0.0
            } else {
                v
            }
        })
        .collect())
}

/// `κ̃ = tr(S_D) - λ̃₁`.
pub fn kappa_tilde(trace_dual: f64, lambda_tilde_1: f64) -> f64 {
    trace_dual - lambda_tilde_1
}

/// The equivalent closed form `κ̃ = (n-1)(tr(S_D) - λ̂₁)/(n-2)`.
pub fn kappa_tilde_from_hat(trace_dual: f64, lambda_hat_1: f64, n: usize) -> f64 {
    (n as f64 - 1.0) * (trace_dual - lambda_hat_1) / (n as f64 - 2.0)
}

/// `(X - X̄) u / sqrt(scale)`. With `scale = (n-1)λ̂₁` this is the unit
/// conventional direction; with `(n-1)λ̃₁` it is the NR direction.
pub fn pc_direction(xc: &DataMatrix, u1: &[f64], scale: f64) -> Result<Vec<f64>> {
    if u1.len() != xc.n() {
        return Err(Error::Dimension(format!(
            "eigenvector has length {}, data has {} samples",
            u1.len(),
            xc.n()
        )));
    }
    if !(scale > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "direction scale must be positive, got {scale}"
        )));
    }
    let inv = scale.sqrt().recip();
    let mut h = xc.mul_vec(u1);
    h.iter_mut().for_each(|x| *x *= inv);
    Ok(h)
}

/// Scores `sqrt((n-1)λ) · u₁ⱼ`.
pub fn pc_scores(u1: &[f64], lambda: f64, n: usize) -> Result<Vec<f64>> {
    if u1.len() != n {
        return Err(Error::Dimension(format!("eigenvector has length {}, expected {n}", u1.len())));
    }
    if !(lambda >= 0.0) {
        return domain(format!("score eigenvalue must be non-negative, got {lambda}"));
    }
    let scale = ((n as f64 - 1.0) * lambda).sqrt();
    Ok(u1.iter().map(|u| scale * u).collect())
}

pub fn score_mse(estimated: &[f64], truth: &[f64]) -> Result<f64> {
    if estimated.len() != truth.len() || estimated.is_empty() {
        return Err(Error::Dimension(format!(
            "score vectors have lengths {} and {}",
            estimated.len(),
            truth.len()
        )));
    }
    let sum: f64 = estimated.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / estimated.len() as f64)
}

/// `λ̃₁ / tr(S_D)`.
pub fn contribution_ratio(lambda_tilde_1: f64, trace_dual: f64) -> Result<f64> {
    if !(trace_dual > 0.0) {
        return domain(format!("contribution ratio needs a positive trace, got {trace_dual}"));
    }
    Ok((lambda_tilde_1 / trace_dual).clamp(0.0, 1.0))
}

/// All first-component estimates for one data set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NrEstimate {
    pub d: usize,
    pub n: usize,
    /// `λ̃₁ … λ̃_{n-2}`
    pub lambda_tilde: Vec<f64>,
    /// `λ̂₁ … λ̂_{n-1}`
    pub lambda_hat: Vec<f64>,
    pub kappa_tilde: f64,
    pub trace_dual: f64,
    /// First eigenvector of `S_D`.
    pub u_hat_1: Vec<f64>,
    pub h_tilde_1: Vec<f64>,
    pub h_hat_1: Vec<f64>,
    pub scores_tilde: Vec<f64>,
    pub scores_hat: Vec<f64>,
}

impl NrEstimate {
    /// Centers `x`, decomposes its dual covariance and builds every
    /// estimate. Fails with [`Error::DegenerateSpectrum`] when `λ̃₁ = 0`.
    pub fn fit(x: &DataMatrix) -> Result<Self> {
        Self::fit_centered(&x.center_columns())
    }

    pub fn fit_centered(xc: &DataMatrix) -> Result<Self> {
        let n = xc.n();
        let sd = xc.dual_covariance();
        let trace_dual = sd.trace();
        let eig = sym_eigen(&sd)?;
        let lambda_hat: Vec<f64> = eig.eigenvalues()[..n - 1].iter().map(|&l| l.max(0.0)).collect();
        let lambda_tilde = nr_eigenvalues_from(eig.eigenvalues(), trace_dual, n)?;
        let lt1 = lambda_tilde[0];
        let lh1 = lambda_hat[0];
        // rounding in the top two eigenvalues is ~1e-16 * trace
        if !(lt1 > 1e-13 * trace_dual) {
            return Err(Error::DegenerateSpectrum(format!(
                "noise-reduced first eigenvalue is {lt1}; no detectable spike"
            )));
        }
        let u_hat_1 = eig.eigenvector(0).to_vec();
        let scale_tilde = (n as f64 - 1.0) * lt1;
        let h_tilde_1 = pc_direction(xc, &u_hat_1, scale_tilde)?;
        let shrink = (lt1 / lh1).sqrt();
        let h_hat_1 = h_tilde_1.iter().map(|x| x * shrink).collect();
        Ok(Self {
            d: xc.d(),
            n,
            kappa_tilde: kappa_tilde(trace_dual, lt1),
            scores_tilde: pc_scores(&u_hat_1, lt1, n)?,
            scores_hat: pc_scores(&u_hat_1, lh1, n)?,
            lambda_tilde,
            lambda_hat,
            trace_dual,
            u_hat_1,
            h_tilde_1,
            h_hat_1,
        })
    }

    pub fn lambda_tilde_1(&self) -> f64 {
        self.lambda_tilde[0]
    }

    pub fn lambda_hat_1(&self) -> f64 {
        self.lambda_hat[0]
    }

    /// `‖h̃₁‖² = λ̂₁ / λ̃₁`, computed from the vector.
    pub fn h_tilde_norm_sq(&self) -> f64 {
        dot(&self.h_tilde_1, &self.h_tilde_1)
    }

    pub fn contribution_ratio(&self) -> Result<f64> {
        contribution_ratio(self.lambda_tilde_1(), self.trace_dual)
    }

    /// Flips the sign of `û₁` and everything derived from it so that
    /// `ĥ₁ᵀh ≥ 0` for the reference direction `h`.
    pub fn align_to(&mut self, h: &[f64]) -> Result<()> {
        if h.len() != self.d {
            return Err(Error::Dimension(format!(
                "reference direction has length {}, expected {}",
                h.len(),
                self.d
            )));
        }
        if dot(&self.h_hat_1, h) < 0.0 {
            for v in [
                &mut self.u_hat_1,
                &mut self.h_tilde_1,
                &mut self.h_hat_1,
                &mut self.scores_tilde,
                &mut self.scores_hat,
            ] {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(())
    }
}
