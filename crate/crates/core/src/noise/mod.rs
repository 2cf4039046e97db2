//! Noise models and their log likelihood-ratios.
//!
//! Each model supplies `log rho(x, y)`, the log Radon-Nikodym density of
//! the noise law translated by the forward image `L(x)`, evaluated at the
//! observation `y` against a fixed reference measure (the noise law
//! itself, or Lebesgue measure in the finite-dimensional case). A value of
//! `-inf` is legal and means an excluded noise pattern: it flows into the
//! posterior as a zero weight, never as an error.
//!
//! Every model also carries a synthetic sampler taking an explicit seed.

mod decomposable;
mod dominated;
mod finite_dim;
mod paths;
mod spherical;

pub use decomposable::{
    char_fn_decomposable, laplace_fourier_terms, log_rho_decomposable, log_rho_laplace_fourier,
    CoordinateDensity, DecomposableNoise,
};
pub use dominated::{girsanov_log_modifier, log_rho_dominated, log_rho_dominated_path, DominatedModifier};
pub use finite_dim::{log_rho_finite_dim, FiniteDimDensity, FiniteDimNoise};
pub use paths::{
    log_rho_brownian, log_rho_subordinated, quadratic_variation, sample_brownian, AlphaModel,
    SubordinatedNoise, SubordinatedSolver,
};
pub use spherical::{
    estimate_gamma, estimate_gamma_detailed, log_rho_spherical, GammaEstimate, SphericalNoise,
    DEGENERATE_SCALE_THRESHOLD,
};

use crate::error::{CoreError, Result};
use crate::fspace::{cm_norm_sq, dual_pairing, CoeffVector};
use crate::seeds;
use rand_distr::{Distribution, StandardNormal};

/// Zero-mean Gaussian noise with diagonal covariance spectrum in its basis:
/// the draw is `sum_i sqrt(lambda_i) xi_i e_i` with standard normal `xi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNoise {
    pub basis_id: String,
    pub eigenvalues: Vec<f64>,
}

impl GaussianNoise {
    pub fn new(basis_id: impl Into<String>, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(CoreError::Model("noise needs at least one coordinate".into()));
        }
        if eigenvalues.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(CoreError::Model(
                "covariance eigenvalues must be finite and positive".into(),
            ));
        }
        Ok(GaussianNoise {
            basis_id: basis_id.into(),
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// One synthetic draw; deterministic per seed.
    pub fn sample(&self, seed: u64) -> CoeffVector {
        let mut rng = seeds::rng_for(seed, 0);
        let coeffs = self
            .eigenvalues
            .iter()
            .map(|l| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                l.sqrt() * xi
            })
            .collect();
        CoeffVector {
            basis_id: self.basis_id.clone(),
            coeffs,
        }
    }
}

pub(crate) fn check_coeff_basis(expected: &str, v: &CoeffVector) -> Result<()> {
    if v.basis_id != expected {
        return Err(CoreError::Basis {
            expected: expected.to_string(),
            got: v.basis_id.clone(),
        });
    }
    Ok(())
}

/// Cameron-Martin log likelihood-ratio of Gaussian noise translated by
/// `lx`, evaluated at `y`:
/// `sum_i y_i lx_i / lambda_i - 1/2 sum_i lx_i^2 / lambda_i`.
pub fn log_rho_gaussian(noise: &GaussianNoise, lx: &CoeffVector, y: &CoeffVector) -> Result<f64> {
    check_coeff_basis(&noise.basis_id, lx)?;
    check_coeff_basis(&noise.basis_id, y)?;
    log_rho_gaussian_raw(&noise.eigenvalues, &lx.coeffs, &y.coeffs)
}

/// [`log_rho_gaussian`] on raw coordinate slices.
pub fn log_rho_gaussian_raw(eigenvalues: &[f64], lx: &[f64], y: &[f64]) -> Result<f64> {
    let pairing = dual_pairing(y, lx, eigenvalues)?;
    let norm_sq = cm_norm_sq(lx, eigenvalues)?;
    let value = pairing - 0.5 * norm_sq;
    if !value.is_finite() {
        return Err(CoreError::Numeric {
            context: "log_rho_gaussian",
            value,
        });
    }
    Ok(value)
}

#[cfg(test)]
pub(crate) mod test_oracles {
    //! Brute-force density oracles kept independent of the formulas they
    //! check: full log-pdf evaluations subtracted term by term.

    /// Log density of `N(mean, diag(lambda))` at `y`, including the
    /// normalizing constant.
    pub fn log_gaussian_pdf_diag(y: &[f64], mean: &[f64], lambda: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..y.len() {
            let d = y[i] - mean[i];
            acc += -0.5 * (2.0 * std::f64::consts::PI * lambda[i]).ln() - 0.5 * d * d / lambda[i];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::test_oracles::log_gaussian_pdf_diag;
    use super::*;
    use rand::Rng;

    #[test]
    fn gaussian_log_rho_vanishes_at_zero_translation() {
        let noise = GaussianNoise::new("b", vec![1.0, 2.0, 3.0]).unwrap();
        let lx = CoeffVector::new("b", vec![0.0; 3]).unwrap();
        let y = CoeffVector::new("b", vec![5.0, -4.0, 0.25]).unwrap();
        assert_eq!(log_rho_gaussian(&noise, &lx, &y).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_log_rho_frozen_example() {
        // Oracle: log N(y; lx, I) - log N(y; 0, I) at lx=(1,0), y=(2,0)
        // equals -1/2 + 2 = 1.5.
        let noise = GaussianNoise::new("b", vec![1.0, 1.0]).unwrap();
        let lx = CoeffVector::new("b", vec![1.0, 0.0]).unwrap();
        let y = CoeffVector::new("b", vec![2.0, 0.0]).unwrap();
        let got = log_rho_gaussian(&noise, &lx, &y).unwrap();
        assert!((got - 1.5).abs() < 1e-14);
        let oracle = log_gaussian_pdf_diag(&y.coeffs, &lx.coeffs, &noise.eigenvalues)
            - log_gaussian_pdf_diag(&y.coeffs, &[0.0, 0.0], &noise.eigenvalues);
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn gaussian_log_rho_at_y_equals_lx() {
        let lam = vec![0.5, 2.0, 4.0];
        let noise = GaussianNoise::new("b", lam.clone()).unwrap();
        let lx = CoeffVector::new("b", vec![1.0, -2.0, 0.5]).unwrap();
        let got = log_rho_gaussian(&noise, &lx, &lx).unwrap();
        let half_norm = 0.5 * crate::fspace::cm_norm_sq(&lx.coeffs, &lam).unwrap();
        assert!((got - half_norm).abs() < 1e-14);
    }

    #[test]
    fn gaussian_log_rho_matches_pdf_ratio_oracle() {
        // exp(log_rho) against the explicit finite-dimensional Gaussian
        // density ratio, dims up to 8, 1e-10 relative.
        let mut rng = seeds::rng_for(11, 0);
        for n in 1..=8 {
            let lam: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
            for _ in 0..200 {
                let lx: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let got = log_rho_gaussian_raw(&lam, &lx, &y).unwrap();
                let zeros = vec![0.0; n];
                let oracle =
                    log_gaussian_pdf_diag(&y, &lx, &lam) - log_gaussian_pdf_diag(&y, &zeros, &lam);
                let scale = 1.0f64.max(oracle.abs());
                assert!(
                    (got - oracle).abs() <= 1e-10 * scale,
                    "n={n}: got {got}, oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn gaussian_sampler_variance_and_determinism() {
        let lam = vec![0.5, 1.0, 2.5];
        let noise = GaussianNoise::new("b", lam.clone()).unwrap();
        let m = 100_000;
        let mut sums = [0.0; 3];
        let mut sq = [0.0; 3];
        for i in 0..m {
            let draw = noise.sample(seeds::derive(99, i));
            for (j, v) in draw.coeffs.iter().enumerate() {
                sums[j] += v;
                sq[j] += v * v;
            }
        }
        for j in 0..3 {
            let var = sq[j] / m as f64 - (sums[j] / m as f64).powi(2);
            assert!(
                (var - lam[j]).abs() < 0.03 * lam[j],
                "coordinate {j}: var {var} vs {}",
                lam[j]
            );
        }
        assert_eq!(noise.sample(42).coeffs, noise.sample(42).coeffs);
        assert_ne!(noise.sample(42).coeffs, noise.sample(43).coeffs);
    }

    #[test]
    fn gaussian_rejects_bad_spectrum() {
        assert!(GaussianNoise::new("b", vec![1.0, 0.0]).is_err());
        assert!(GaussianNoise::new("b", vec![f64::NAN]).is_err());
        assert!(GaussianNoise::new("b", vec![]).is_err());
    }
}
