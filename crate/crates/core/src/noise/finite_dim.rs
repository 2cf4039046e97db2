//! Finite-dimensional noise with a density against Lebesgue measure.
//!
//! Here the reference measure is Lebesgue measure on `R^k` and the
//! likelihood is `D(y - L(x))` itself, not a ratio against the noise law.

use crate::error::{CoreError, Result};
use crate::seeds;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Noise density on `k`-vectors, positive almost everywhere.
#[derive(Debug, Clone)]
pub enum FiniteDimDensity {
    /// Standard normal on `R^k`.
    StdNormal,
    /// Uniform on the centered box with the given half width.
    UniformBox { half_width: f64 },
    /// User-supplied log-density; must return finite values or `-inf`.
    Custom { name: String, log_density: fn(&[f64]) -> f64 },
}

#[derive(Debug, Clone)]
pub struct FiniteDimNoise {
    pub dim: usize,
    pub density: FiniteDimDensity,
}

impl FiniteDimNoise {
    pub fn new(dim: usize, density: FiniteDimDensity) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::Model("noise dimension must be >= 1".into()));
        }
        if let FiniteDimDensity::UniformBox { half_width } = &density {
            if !(half_width.is_finite() && *half_width > 0.0) {
                return Err(CoreError::Model("box half width must be positive".into()));
            }
        }
        Ok(FiniteDimNoise { dim, density })
    }

    /// Log density at `v`.
    pub fn log_density(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(CoreError::Model(format!(
                "dimension mismatch: noise {}, vector {}",
                self.dim,
                v.len()
            )));
        }
        let value = match &self.density {
            FiniteDimDensity::StdNormal => {
                let k = self.dim as f64;
                let sq: f64 = v.iter().map(|x| x * x).sum();
                -0.5 * k * (2.0 * std::f64::consts::PI).ln() - 0.5 * sq
            }
            FiniteDimDensity::UniformBox { half_width } => {
                if v.iter().all(|x| x.abs() <= *half_width) {
                    -(self.dim as f64) * (2.0 * half_width).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            FiniteDimDensity::Custom { log_density, .. } => log_density(v),
        };
        if value.is_nan() || value == f64::INFINITY {
            return Err(CoreError::Numeric {
                context: "finite-dimensional log density",
                value,
            });
        }
        Ok(value)
    }

    /// One synthetic draw; custom densities carry no sampler.
    pub fn sample(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = seeds::rng_for(seed, 0);
        match &self.density {
            FiniteDimDensity::StdNormal => Ok((0..self.dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()),
            FiniteDimDensity::UniformBox { half_width } => Ok((0..self.dim)
                .map(|_| rng.gen_range(-half_width..*half_width))
                .collect()),
            FiniteDimDensity::Custom { name, .. } => Err(CoreError::Model(format!(
                "custom density `{name}` has no sampler"
            ))),
        }
    }
}

/// Log likelihood `log D(y - lx)`; `-inf` is a legal value (the translated
/// point fell outside the density's support).
pub fn log_rho_finite_dim(noise: &FiniteDimNoise, lx: &[f64], y: &[f64]) -> Result<f64> {
    if lx.len() != y.len() {
        return Err(CoreError::Model(format!(
            "dimension mismatch: lx {}, y {}",
            lx.len(),
            y.len()
        )));
    }
    let diff: Vec<f64> = y.iter().zip(lx).map(|(a, b)| a - b).collect();
    noise.log_density(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use rand::Rng;

    #[test]
    fn std_normal_at_exact_match() {
        for k in 1..=4 {
            let noise = FiniteDimNoise::new(k, FiniteDimDensity::StdNormal).unwrap();
            let v = vec![0.7; k];
            let got = log_rho_finite_dim(&noise, &v, &v).unwrap();
            let expected = -(k as f64) / 2.0 * (2.0 * std::f64::consts::PI).ln();
            assert!((got - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_box_excludes_outside() {
        let noise =
            FiniteDimNoise::new(2, FiniteDimDensity::UniformBox { half_width: 1.0 }).unwrap();
        let lx = vec![0.5, 0.0];
        let inside = vec![1.2, 0.3];
        let outside = vec![1.6, 0.0];
        assert!((log_rho_finite_dim(&noise, &lx, &inside).unwrap() - -(2.0f64.ln() * 2.0)).abs() < 1e-14);
        assert_eq!(
            log_rho_finite_dim(&noise, &lx, &outside).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn matches_direct_pdf_oracle_for_small_dims() {
        // Direct pdf evaluation, independent arithmetic, 1e-12.
        let mut rng = seeds::rng_for(2, 0);
        for k in 1..=3 {
            let noise = FiniteDimNoise::new(k, FiniteDimDensity::StdNormal).unwrap();
            for _ in 0..200 {
                let lx: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let y: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let got = log_rho_finite_dim(&noise, &lx, &y).unwrap();
                let mut oracle = 1.0;
                for i in 0..k {
                    let d: f64 = y[i] - lx[i];
                    oracle *= (-0.5 * d * d).exp() / (2.0 * std::f64::consts::PI).sqrt();
                }
                assert!((got - oracle.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn built_in_densities_are_normalized() {
        // Numerical normalization check for the built-ins: 1-d quadrature
        // of exp(log D) over a wide range.
        let quad = |noise: &FiniteDimNoise, lo: f64, hi: f64, n: usize| -> f64 {
            let h = (hi - lo) / n as f64;
            let mut acc = 0.0;
            for j in 0..=n {
                let t = lo + h * j as f64;
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * noise.log_density(&[t]).unwrap().exp();
            }
            acc * h
        };
        let normal = FiniteDimNoise::new(1, FiniteDimDensity::StdNormal).unwrap();
        assert!((quad(&normal, -10.0, 10.0, 4000) - 1.0).abs() < 1e-8);
        let boxed =
            FiniteDimNoise::new(1, FiniteDimDensity::UniformBox { half_width: 1.5 }).unwrap();
        assert!((quad(&boxed, -1.5, 1.5, 3000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_is_seed_deterministic() {
        let noise = FiniteDimNoise::new(3, FiniteDimDensity::StdNormal).unwrap();
        assert_eq!(noise.sample(5).unwrap(), noise.sample(5).unwrap());
        let custom = FiniteDimNoise::new(
            1,
            FiniteDimDensity::Custom {
                name: "flat".into(),
                log_density: |_| 0.0,
            },
        )
        .unwrap();
        assert!(custom.sample(1).is_err());
    }
}
