//! Spherically invariant noise `gamma * Z` with Gaussian `Z` and an
//! independent positive random scale `gamma`.
//!
//! The scale is recoverable from a single observed sample: the averaged
//! squared coordinates `(1/n) sum (y_i / sqrt(lambda_i))^2` converge to
//! `gamma^2` by the law of large numbers, and conditionally on the
//! recovered scale the likelihood-ratio is the Gaussian one with the
//! spectrum inflated by `gamma^2`. The resulting posterior does not depend
//! on the law of `gamma` at all, which is why the law is carried as a
//! metadata label only.

use super::{check_coeff_basis, GaussianNoise};
use crate::error::{CoreError, Result};
use crate::fspace::{cm_norm_sq, dual_pairing, CoeffVector};

/// Below this estimated scale the sample is treated as lying where the
/// defining limit vanishes and no posterior is formed.
pub const DEGENERATE_SCALE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalNoise {
    /// Law of `Z`.
    pub base: GaussianNoise,
    /// Number of leading coordinates used by the scale estimator.
    pub n_estimator_terms: usize,
    /// Descriptive label of the mixing law; never enters any formula.
    pub gamma_law_label: String,
}

impl SphericalNoise {
    pub fn new(
        base: GaussianNoise,
        n_estimator_terms: usize,
        gamma_law_label: impl Into<String>,
    ) -> Result<Self> {
        if n_estimator_terms == 0 || n_estimator_terms > base.dim() {
            return Err(CoreError::Model(format!(
                "estimator terms must be in 1..={}, got {n_estimator_terms}",
                base.dim()
            )));
        }
        Ok(SphericalNoise {
            base,
            n_estimator_terms,
            gamma_law_label: gamma_law_label.into(),
        })
    }

    /// One draw of `gamma * Z` at an explicitly supplied scale. The model
    /// itself carries no mixing law, so synthetic data generation names the
    /// true scale.
    pub fn sample_scaled(&self, gamma: f64, seed: u64) -> CoeffVector {
        let z = self.base.sample(seed);
        CoeffVector {
            basis_id: z.basis_id,
            coeffs: z.coeffs.into_iter().map(|v| gamma * v).collect(),
        }
    }
}

/// Scale estimate with its sampling uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    /// Delta-method standard error; infinite when the estimate is zero.
    pub std_error: f64,
    pub terms: usize,
}

/// Estimates the scale from one observation:
/// `gamma_hat = sqrt( (1/n) sum_{i<n} (y_i / sqrt(lambda_i))^2 )`.
///
/// The caller must check the estimate against
/// [`DEGENERATE_SCALE_THRESHOLD`] before forming a posterior.
pub fn estimate_gamma(y: &CoeffVector, noise: &SphericalNoise) -> Result<f64> {
    Ok(estimate_gamma_detailed(y, noise)?.gamma_hat)
}

/// [`estimate_gamma`] plus the sample standard error of the estimate.
pub fn estimate_gamma_detailed(y: &CoeffVector, noise: &SphericalNoise) -> Result<GammaEstimate> {
    check_coeff_basis(&noise.base.basis_id, y)?;
    if y.coeffs.len() < noise.n_estimator_terms {
        return Err(CoreError::Model(format!(
            "observation has {} coordinates, estimator needs {}",
            y.coeffs.len(),
            noise.n_estimator_terms
        )));
    }
    let n = noise.n_estimator_terms;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n {
        let z = y.coeffs[i] / noise.base.eigenvalues[i].sqrt();
        let z2 = z * z;
        sum += z2;
        sum_sq += z2 * z2;
    }
    let mean = sum / n as f64;
    if !mean.is_finite() {
        return Err(CoreError::Numeric {
            context: "estimate_gamma",
            value: mean,
        });
    }
    let gamma_hat = mean.sqrt();
    let var_of_mean = ((sum_sq / n as f64 - mean * mean).max(0.0)) / n as f64;
    let std_error = if gamma_hat > 0.0 {
        var_of_mean.sqrt() / (2.0 * gamma_hat)
    } else {
        f64::INFINITY
    };
    Ok(GammaEstimate {
        gamma_hat,
        std_error,
        terms: n,
    })
}

/// Log likelihood-ratio conditional on the recovered scale:
/// `gamma_hat^{-2} <y, C^{-1} lx> - (2 gamma_hat^2)^{-1} ||lx||_H^2`.
pub fn log_rho_spherical(
    noise: &SphericalNoise,
    lx: &CoeffVector,
    y: &CoeffVector,
    gamma_hat: f64,
) -> Result<f64> {
    if !gamma_hat.is_finite() || gamma_hat < DEGENERATE_SCALE_THRESHOLD {
        return Err(CoreError::DegenerateScale { gamma_hat });
    }
    check_coeff_basis(&noise.base.basis_id, lx)?;
    check_coeff_basis(&noise.base.basis_id, y)?;
    let lam = &noise.base.eigenvalues;
    let inv2 = 1.0 / (gamma_hat * gamma_hat);
    let value =
        inv2 * dual_pairing(&y.coeffs, &lx.coeffs, lam)? - (0.5 * inv2) * cm_norm_sq(&lx.coeffs, lam)?;
    if !value.is_finite() {
        return Err(CoreError::Numeric {
            context: "log_rho_spherical",
            value,
        });
    }
    Ok(value)
}
