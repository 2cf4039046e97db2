//! Gaussian noise modified by a dominating density factor.
//!
//! The modified noise law has density `f` against the Gaussian reference,
//! so the translated likelihood-ratio factors as
//! `log f(y - L(x)) + log rho_gaussian(L(x), y)`. Supported factors are the
//! restriction of the noise to a coordinate box (an indicator scaled by the
//! inverse box mass) and the drift `a(s, x) = 2x / (1 + x^2)` added to a
//! Brownian path, whose density is evaluated through the continuous
//! rewriting of the Girsanov exponent.

use super::{check_coeff_basis, log_rho_gaussian_raw, GaussianNoise};
use crate::error::{CoreError, Result};
use crate::fspace::{trapezoid, CoeffVector, PathGrid};
use crate::noise::paths::log_rho_brownian;
use statrs::function::erf::erf;

#[derive(Debug, Clone)]
pub enum DominatedModifier {
    /// `f` identically one; reduces to the plain Gaussian ratio.
    Trivial,
    /// Noise restricted to `{ v : |v_i| <= bound for i in coords }`;
    /// `f = indicator / mass`.
    BoxRestriction { coords: Vec<usize>, bound: f64 },
    /// Brownian motion plus the drift `2x/(1+x^2)` integrated over
    /// `[0, horizon]`; evaluated on path observations.
    GirsanovDrift { horizon: f64 },
    /// User-supplied log-factor on observation coordinates; must return a
    /// finite value or `-inf`.
    Custom { name: String, log_f: fn(&[f64]) -> f64 },
}

impl DominatedModifier {
    pub fn box_restriction(coords: Vec<usize>, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(CoreError::Model("box bound must be positive".into()));
        }
        if coords.is_empty() {
            return Err(CoreError::Model("box restriction needs coordinates".into()));
        }
        Ok(DominatedModifier::BoxRestriction { coords, bound })
    }

    /// Log mass `log P(noise in box)` under the Gaussian reference; the
    /// coordinates are independent so the mass is a product of error
    /// functions.
    pub fn box_log_mass(&self, noise: &GaussianNoise) -> Result<f64> {
        match self {
            DominatedModifier::BoxRestriction { coords, bound } => {
                let mut acc = 0.0;
                for &i in coords {
                    let lam = *noise.eigenvalues.get(i).ok_or_else(|| {
                        CoreError::Model(format!("box coordinate {i} out of range"))
                    })?;
                    acc += erf(bound / (2.0 * lam).sqrt()).ln();
                }
                Ok(acc)
            }
            _ => Err(CoreError::Model("box_log_mass needs a box restriction".into())),
        }
    }

    /// Log factor `log f(v)` on observation coordinates.
    pub fn log_factor_coeffs(&self, noise: &GaussianNoise, v: &[f64]) -> Result<f64> {
        match self {
            DominatedModifier::Trivial => Ok(0.0),
            DominatedModifier::BoxRestriction { coords, bound } => {
                for &i in coords {
                    let vi = *v.get(i).ok_or_else(|| {
                        CoreError::Model(format!("box coordinate {i} out of range"))
                    })?;
                    if vi.abs() > *bound {
                        return Ok(f64::NEG_INFINITY);
                    }
                }
                Ok(-self.box_log_mass(noise)?)
            }
            DominatedModifier::GirsanovDrift { .. } => Err(CoreError::Model(
                "girsanov drift modifier applies to path observations".into(),
            )),
            DominatedModifier::Custom { name, log_f } => {
                let value = log_f(v);
                if value.is_nan() || value == f64::INFINITY {
                    return Err(CoreError::Numeric {
                        context: "custom dominated modifier",
                        value,
                    });
                }
                let _ = name;
                Ok(value)
            }
        }
    }

    /// Log factor on a path observation.
    pub fn log_factor_path(&self, diff: &PathGrid) -> Result<f64> {
        match self {
            DominatedModifier::Trivial => Ok(0.0),
            DominatedModifier::GirsanovDrift { horizon } => girsanov_log_modifier(diff, *horizon),
            DominatedModifier::Custom { log_f, .. } => {
                let value = log_f(&diff.values);
                if value.is_nan() || value == f64::INFINITY {
                    return Err(CoreError::Numeric {
                        context: "custom dominated modifier",
                        value,
                    });
                }
                Ok(value)
            }
            DominatedModifier::BoxRestriction { .. } => Err(CoreError::Model(
                "box restriction applies to coefficient observations".into(),
            )),
        }
    }
}

/// Log likelihood-ratio of dominated noise on coefficient observations:
/// `log f(y - lx)` plus the Gaussian Cameron-Martin term. `-inf` signals an
/// excluded noise pattern and is a legal value.
pub fn log_rho_dominated(
    noise: &GaussianNoise,
    modifier: &DominatedModifier,
    lx: &CoeffVector,
    y: &CoeffVector,
) -> Result<f64> {
    check_coeff_basis(&noise.basis_id, lx)?;
    check_coeff_basis(&noise.basis_id, y)?;
    let diff: Vec<f64> = y.coeffs.iter().zip(&lx.coeffs).map(|(a, b)| a - b).collect();
    let lf = modifier.log_factor_coeffs(noise, &diff)?;
    if lf == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let value = lf + log_rho_gaussian_raw(&noise.eigenvalues, &lx.coeffs, &y.coeffs)?;
    if value.is_nan() || value == f64::INFINITY {
        return Err(CoreError::Numeric {
            context: "log_rho_dominated",
            value,
        });
    }
    Ok(value)
}

/// Log likelihood-ratio of dominated noise on path observations, with
/// Brownian motion as the Gaussian reference on the shared grid:
/// `log f(y - lx) + log rho_brownian(lx, y)`.
pub fn log_rho_dominated_path(
    modifier: &DominatedModifier,
    lx: &PathGrid,
    y: &PathGrid,
) -> Result<f64> {
    lx.check_aligned(y)?;
    let diff_values: Vec<f64> = y.values.iter().zip(&lx.values).map(|(a, b)| a - b).collect();
    let diff = PathGrid::new(y.times.clone(), diff_values)?;
    let lf = modifier.log_factor_path(&diff)?;
    if lf == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let value = lf + log_rho_brownian(lx, y)?;
    if value.is_nan() || value == f64::INFINITY {
        return Err(CoreError::Numeric {
            context: "log_rho_dominated_path",
            value,
        });
    }
    Ok(value)
}

/// Log density of the drifted Brownian path against Brownian motion,
/// through the continuous (Ito-rewritten) representative of the Girsanov
/// exponent for `a(s, x) = 2x / (1 + x^2)`:
///
/// `ln(1 + y_T^2) - int_0^T (1 - y^2)/(1 + y^2)^2 ds
///  - 1/2 int_0^T (2y/(1 + y^2))^2 ds`,
///
/// with both integrals evaluated by the trapezoid rule on the observation
/// grid. No raw stochastic integral is ever formed.
pub fn girsanov_log_modifier(path: &PathGrid, horizon: f64) -> Result<f64> {
    let tol = 1e-9 * 1.0f64.max(horizon.abs());
    if path.times[0].abs() > tol || (path.horizon() - horizon).abs() > tol {
        return Err(CoreError::Domain(format!(
            "path spans [{}, {}], expected [0, {horizon}]",
            path.times[0],
            path.horizon()
        )));
    }
    let ito_term: Vec<f64> = path
        .values
        .iter()
        .map(|&v| {
            let d = 1.0 + v * v;
            (1.0 - v * v) / (d * d)
        })
        .collect();
    let energy_term: Vec<f64> = path
        .values
        .iter()
        .map(|&v| {
            let a = 2.0 * v / (1.0 + v * v);
            a * a
        })
        .collect();
    let y_t = *path.values.last().unwrap();
    Ok((1.0 + y_t * y_t).ln()
        - trapezoid(&path.times, &ito_term)
        - 0.5 * trapezoid(&path.times, &energy_term))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fspace::uniform_times;
    use crate::noise::test_oracles::log_gaussian_pdf_diag;
    use crate::seeds;
    use rand::Rng;

    fn constant_path(cells: usize, horizon: f64, c: f64) -> PathGrid {
        let times = uniform_times(cells, horizon).unwrap();
        let values = vec![c; times.len()];
        PathGrid::new(times, values).unwrap()
    }

    #[test]
    fn trivial_modifier_reduces_to_gaussian() {
        let noise = GaussianNoise::new("b", vec![1.0, 0.5]).unwrap();
        let lx = CoeffVector::new("b", vec![0.3, -0.4]).unwrap();
        let y = CoeffVector::new("b", vec![1.0, 2.0]).unwrap();
        let a = log_rho_dominated(&noise, &DominatedModifier::Trivial, &lx, &y).unwrap();
        let b = super::super::log_rho_gaussian(&noise, &lx, &y).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn violated_box_gives_minus_infinity() {
        let noise = GaussianNoise::new("b", vec![1.0, 1.0]).unwrap();
        let modifier = DominatedModifier::box_restriction(vec![0, 1], 0.5).unwrap();
        let lx = CoeffVector::new("b", vec![0.0, 0.0]).unwrap();
        let y = CoeffVector::new("b", vec![2.0, 0.0]).unwrap();
        assert_eq!(
            log_rho_dominated(&noise, &modifier, &lx, &y).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn box_factor_is_inverse_mass_inside() {
        // LLN oracle for the box mass: empirical frequency of the event
        // over Gaussian draws, 3 sigma tolerance.
        let noise = GaussianNoise::new("b", vec![0.8, 1.3]).unwrap();
        let bound = 1.1;
        let modifier = DominatedModifier::box_restriction(vec![0, 1], bound).unwrap();
        let log_mass = modifier.box_log_mass(&noise).unwrap();
        let m = 200_000;
        let mut hits = 0usize;
        for i in 0..m {
            let draw = noise.sample(seeds::derive(7, i as u64));
            if draw.coeffs.iter().all(|v| v.abs() <= bound) {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / m as f64;
        let p = log_mass.exp();
        let sigma = (p * (1.0 - p) / m as f64).sqrt();
        assert!((p_hat - p).abs() < 3.0 * sigma, "p_hat {p_hat} vs p {p}");
        // Inside the box the factor is exactly exp(-log_mass).
        let inside = vec![0.1, -0.2];
        assert_eq!(
            modifier.log_factor_coeffs(&noise, &inside).unwrap(),
            -log_mass
        );
    }

    #[test]
    fn girsanov_zero_path_equals_minus_horizon() {
        let path = constant_path(128, 1.0, 0.0);
        let got = girsanov_log_modifier(&path, 1.0).unwrap();
        assert!((got - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn girsanov_constant_path_matches_hand_integral() {
        // Hand integral for y == c on [0, T]:
        // ln(1+c^2) - T(1-c^2)/(1+c^2)^2 - 2Tc^2/(1+c^2)^2.
        for &(c, t) in &[(0.7, 1.0), (-1.2, 2.0), (2.5, 0.5)] {
            let path = constant_path(64, t, c);
            let d = 1.0 + c * c;
            let expected = d.ln() - t * (1.0 - c * c) / (d * d) - 2.0 * t * c * c / (d * d);
            let got = girsanov_log_modifier(&path, t).unwrap();
            assert!((got - expected).abs() < 1e-12, "c={c}, T={t}");
        }
    }

    #[test]
    fn girsanov_quadrature_converges_under_refinement() {
        let smooth = |t: f64| (2.0 * t).sin() + 0.5 * t;
        let make = |cells: usize| {
            let times = uniform_times(cells, 1.0).unwrap();
            let values: Vec<f64> = times.iter().map(|&t| smooth(t)).collect();
            PathGrid::new(times, values).unwrap()
        };
        let coarse = girsanov_log_modifier(&make(512), 1.0).unwrap();
        let fine = girsanov_log_modifier(&make(1024), 1.0).unwrap();
        assert!((coarse - fine).abs() < 1e-4);
    }

    #[test]
    fn girsanov_rejects_wrong_span() {
        let path = constant_path(8, 0.5, 0.0);
        assert!(matches!(
            girsanov_log_modifier(&path, 1.0),
            Err(CoreError::Domain(_))
        ));
    }

    #[test]
    fn dominated_path_zero_diff_is_modifier_at_zero_plus_cm() {
        // y == lx: the modifier sees the zero path (log f = -T) and the
        // Brownian term is +1/2 ||lx||^2 in the grid metric.
        let times = uniform_times(64, 1.0).unwrap();
        let values: Vec<f64> = times.iter().map(|&t| 0.3 * t).collect();
        let lx = PathGrid::new(times.clone(), values.clone()).unwrap();
        let y = PathGrid::new(times, values).unwrap();
        let modifier = DominatedModifier::GirsanovDrift { horizon: 1.0 };
        let got = log_rho_dominated_path(&modifier, &lx, &y).unwrap();
        let cm = log_rho_brownian(&lx, &y).unwrap();
        assert!((got - (-1.0 + cm)).abs() < 1e-10);
    }

    #[test]
    fn dominated_gaussian_coordinates_match_pdf_ratio_with_box() {
        // Brute-force oracle: restricted-noise density ratio equals
        // indicator * gaussian pdf ratio when inside the box.
        let mut rng = seeds::rng_for(5, 0);
        let lam = vec![1.0, 2.0];
        let noise = GaussianNoise::new("b", lam.clone()).unwrap();
        let modifier = DominatedModifier::box_restriction(vec![0], 5.0).unwrap();
        let log_mass = modifier.box_log_mass(&noise).unwrap();
        for _ in 0..100 {
            let lx: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = log_rho_dominated(
                &noise,
                &modifier,
                &CoeffVector::new("b", lx.clone()).unwrap(),
                &CoeffVector::new("b", y.clone()).unwrap(),
            )
            .unwrap();
            let zeros = vec![0.0; 2];
            let oracle = -log_mass + log_gaussian_pdf_diag(&y, &lx, &lam)
                - log_gaussian_pdf_diag(&y, &zeros, &lam);
            assert!((got - oracle).abs() < 1e-10);
        }
    }
}
