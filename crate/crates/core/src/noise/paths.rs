//! Path-valued noise: Brownian samples, quadratic variation, and
//! time-changed (subordinated) Brownian motion.
//!
//! Subordinated noise is `B_{alpha_t}` for a strictly increasing random
//! time change `alpha` independent of the Brownian motion. The time change
//! is recoverable from one observed path as its quadratic variation, and
//! conditionally on it the noise is Gaussian with covariance kernel
//! `min(alpha_s, alpha_t)`, which is what the likelihood-ratio solve uses.

use crate::error::{CoreError, Result};
use crate::fspace::PathGrid;
use crate::seeds;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Standard Brownian path on the given times (first time must be 0); the
/// value at time 0 is 0 and increments are `N(0, dt)`.
pub fn sample_brownian(times: &[f64], seed: u64) -> Result<PathGrid> {
    if times.first() != Some(&0.0) {
        return Err(CoreError::Grid("Brownian paths start at time 0".into()));
    }
    let mut rng = seeds::rng_for(seed, 0);
    let mut values = Vec::with_capacity(times.len());
    values.push(0.0);
    for j in 1..times.len() {
        let dt = times[j] - times[j - 1];
        let xi: f64 = StandardNormal.sample(&mut rng);
        values.push(values[j - 1] + dt.sqrt() * xi);
    }
    PathGrid::new(times.to_vec(), values)
}

/// Cumulative quadratic variation of a path: at each grid time, the sum of
/// squared increments up to it. Nondecreasing and starting at 0.
pub fn quadratic_variation(path: &PathGrid) -> Result<PathGrid> {
    let mut values = Vec::with_capacity(path.len());
    values.push(0.0);
    let mut acc = 0.0;
    for j in 1..path.len() {
        let d = path.values[j] - path.values[j - 1];
        acc += d * d;
        values.push(acc);
    }
    PathGrid::new(path.times.clone(), values)
}

/// Time-change model: `alpha_t` is the integral of `floor + G` for i.i.d.
/// Gamma(shape, rate) cell rates `G`, so sampled paths are strictly
/// increasing with slope at least `floor` and `alpha_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaModel {
    pub shape: f64,
    pub rate: f64,
    pub floor: f64,
}

impl AlphaModel {
    pub fn new(shape: f64, rate: f64, floor: f64) -> Result<Self> {
        for (name, v) in [("shape", shape), ("rate", rate), ("floor", floor)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CoreError::Model(format!(
                    "alpha model {name} must be positive, got {v}"
                )));
            }
        }
        Ok(AlphaModel { shape, rate, floor })
    }
}

/// Subordinated noise on a fixed observation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatedNoise {
    pub times: Vec<f64>,
    pub alpha: AlphaModel,
}

impl SubordinatedNoise {
    pub fn new(times: Vec<f64>, alpha: AlphaModel) -> Result<Self> {
        PathGrid::new(times.clone(), vec![0.0; times.len()])?;
        if times[0] != 0.0 {
            return Err(CoreError::Grid("subordinated grid starts at time 0".into()));
        }
        Ok(SubordinatedNoise { times, alpha })
    }

    /// One time-change path; strictly increasing, `alpha_0 = 0`.
    pub fn sample_alpha(&self, seed: u64) -> PathGrid {
        let mut rng = seeds::rng_for(seed, 1);
        let gamma = Gamma::new(self.alpha.shape, 1.0 / self.alpha.rate)
            .expect("validated gamma parameters");
        let mut values = Vec::with_capacity(self.times.len());
        values.push(0.0);
        for j in 1..self.times.len() {
            let dt = self.times[j] - self.times[j - 1];
            let rate_sample: f64 = gamma.sample(&mut rng);
            values.push(values[j - 1] + dt * (self.alpha.floor + rate_sample));
        }
        PathGrid::new(self.times.clone(), values).expect("increasing by construction")
    }

    /// One noise path `B_{alpha_t}`; the Brownian increments over the
    /// sampled time change have variance `alpha_j - alpha_{j-1}`.
    pub fn sample(&self, seed: u64) -> PathGrid {
        let alpha = self.sample_alpha(seed);
        let mut rng = seeds::rng_for(seed, 2);
        let mut values = Vec::with_capacity(self.times.len());
        values.push(0.0);
        for j in 1..self.times.len() {
            let dv = alpha.values[j] - alpha.values[j - 1];
            let xi: f64 = StandardNormal.sample(&mut rng);
            values.push(values[j - 1] + dv.sqrt() * xi);
        }
        PathGrid::new(self.times.clone(), values).expect("grid already validated")
    }
}

/// Prefactored covariance solve for a fixed estimated time change, so one
/// factorization serves every particle of a reweighting.
pub struct SubordinatedSolver {
    times: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SubordinatedSolver {
    /// Builds the interior covariance `K_ij = min(alpha_i, alpha_j)` from
    /// an estimated time change and factors it.
    pub fn new(alpha_hat: &PathGrid) -> Result<Self> {
        let m = alpha_hat.len() - 1;
        let interior = &alpha_hat.values[1..];
        if alpha_hat.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::DegenerateQv(
                "estimated time change is not strictly increasing".into(),
            ));
        }
        if interior[0] <= 0.0 {
            return Err(CoreError::DegenerateQv(
                "estimated time change vanishes on interior points".into(),
            ));
        }
        let k = DMatrix::from_fn(m, m, |i, j| interior[i].min(interior[j]));
        let chol = Cholesky::new(k).ok_or(CoreError::Numeric {
            context: "subordinated covariance factorization",
            value: f64::NAN,
        })?;
        Ok(SubordinatedSolver {
            times: alpha_hat.times.clone(),
            chol,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `<y, K^{-1} lx> - 1/2 <lx, K^{-1} lx>` on interior grid values.
    pub fn log_rho(&self, lx: &PathGrid, y: &PathGrid) -> Result<f64> {
        if lx.times != self.times || y.times != self.times {
            return Err(CoreError::Grid(
                "paths and estimated time change live on different grids".into(),
            ));
        }
        self.log_rho_values(&lx.values, &y.values)
    }

    /// [`SubordinatedSolver::log_rho`] on raw grid values (including the
    /// time-zero entry), for callers that already checked alignment.
    pub fn log_rho_values(&self, lx_values: &[f64], y_values: &[f64]) -> Result<f64> {
        let m = self.times.len() - 1;
        if lx_values.len() != m + 1 || y_values.len() != m + 1 {
            return Err(CoreError::Grid(format!(
                "expected {} grid values, got {} and {}",
                m + 1,
                lx_values.len(),
                y_values.len()
            )));
        }
        let lx_int = DVector::from_iterator(m, lx_values[1..].iter().copied());
        let w = self.chol.solve(&lx_int);
        let mut y_dot = 0.0;
        let mut lx_dot = 0.0;
        for (j, wj) in w.iter().enumerate() {
            y_dot += y_values[j + 1] * wj;
            lx_dot += lx_values[j + 1] * wj;
        }
        let value = y_dot - 0.5 * lx_dot;
        if !value.is_finite() {
            return Err(CoreError::Numeric {
                context: "log_rho_subordinated",
                value,
            });
        }
        Ok(value)
    }
}

/// Log likelihood-ratio of subordinated noise given the estimated time
/// change `alpha_hat` (in practice the quadratic variation of the observed
/// path), the forward image `lx`, and the observation `y`, all on one grid.
pub fn log_rho_subordinated(alpha_hat: &PathGrid, lx: &PathGrid, y: &PathGrid) -> Result<f64> {
    alpha_hat.check_aligned(lx)?;
    alpha_hat.check_aligned(y)?;
    SubordinatedSolver::new(alpha_hat)?.log_rho(lx, y)
}

/// Brownian-motion Cameron-Martin log-ratio on a grid: the subordinated
/// solve with the identity time change `alpha_t = t`.
pub fn log_rho_brownian(lx: &PathGrid, y: &PathGrid) -> Result<f64> {
    lx.check_aligned(y)?;
    let identity = PathGrid::new(lx.times.clone(), lx.times.clone())?;
    log_rho_subordinated(&identity, lx, y)
}
