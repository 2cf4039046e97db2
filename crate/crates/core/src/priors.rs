//! Prior construction and approximation schemes.
//!
//! Each scheme produces a [`PriorEnsemble`]: `M` equally weighted particles
//! approximating the prior law at a discretization level. Particles are
//! either coefficient vectors in a shared basis or path values on a shared
//! grid; levels are nested so that refining a level reuses the same
//! randomness (common random numbers), which is what the convergence
//! ladders rely on.

use crate::error::{CoreError, Result};
use crate::exec::{map_range, ExecMode};
use crate::fspace::{uniform_times, CoeffVector, PathGrid};
use crate::seeds;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erf_inv;

/// Where the particles of an ensemble live.
#[derive(Debug, Clone, PartialEq)]
pub enum ParticleSpace {
    /// Coefficient vectors in the named basis.
    Coeffs { basis_id: String },
    /// Path values on the shared time grid.
    Paths { times: Vec<f64> },
}

/// Particles with uniform weights approximating a prior distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorEnsemble {
    /// Identifier tying posteriors back to the ensemble they reweight.
    pub id: String,
    pub space: ParticleSpace,
    pub level: usize,
    pub particles: Vec<Vec<f64>>,
    pub seed: u64,
    /// Hierarchical schemes record the drawn scale of each particle so the
    /// factorization `x = t * z` stays reconstructible bit-exactly.
    pub scales: Option<Vec<f64>>,
}

impl PriorEnsemble {
    fn new_checked(
        id: String,
        space: ParticleSpace,
        level: usize,
        particles: Vec<Vec<f64>>,
        seed: u64,
        scales: Option<Vec<f64>>,
    ) -> Result<Self> {
        if particles.is_empty() {
            return Err(CoreError::Model("ensemble needs at least one particle".into()));
        }
        let dim = particles[0].len();
        if particles.iter().any(|p| p.len() != dim) {
            return Err(CoreError::Model("particles must share a dimension".into()));
        }
        Ok(PriorEnsemble {
            id,
            space,
            level,
            particles,
            seed,
            scales,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].len()
    }

    /// Uniform-weight ensemble average of a functional, computed through
    /// the same weighted reduction the posterior module uses, so a
    /// constant-likelihood posterior reproduces it bit-exactly.
    pub fn mean_functional<F: Fn(&[f64]) -> f64>(&self, g: F) -> f64 {
        let m = self.len();
        let w = vec![1.0 / m as f64; m];
        crate::exec::pairwise_weighted_sum(&w, &|i| g(&self.particles[i]))
    }
}

/// Eigenvalue specification for truncated-series schemes: an explicit list
/// or the polynomial decay `sigma_i = (1 + i)^{-p}` (0-based), `p > 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    Explicit(Vec<f64>),
    Decay { p: f64, dim: usize },
}

impl SigmaSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        match self {
            SigmaSpec::Explicit(v) => {
                if v.is_empty() || v.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    return Err(CoreError::Model(
                        "sigma list must be nonempty, finite, positive".into(),
                    ));
                }
                Ok(v.clone())
            }
            SigmaSpec::Decay { p, dim } => {
                if !(*p > 0.5) {
                    return Err(CoreError::Model(format!(
                        "eigendecay needs p > 1/2 for a square-summable reference, got {p}"
                    )));
                }
                if *dim == 0 {
                    return Err(CoreError::Model("decay spec needs dim >= 1".into()));
                }
                Ok((0..*dim).map(|i| (1.0 + i as f64).powf(-p)).collect())
            }
        }
    }
}

fn ensemble_id(kind: &str, level: usize, m: usize, seed: u64) -> String {
    format!("{kind}-l{level}-m{m}-s{seed}")
}

/// Truncated-series prior: particle coordinates `sigma_i * xi_i` for
/// `i < level`, exactly zero beyond, inside a common truncation dimension.
pub fn sample_kl(
    basis_id: &str,
    sigmas: &SigmaSpec,
    level: usize,
    m: usize,
    seed: u64,
) -> Result<PriorEnsemble> {
    let sig = sigmas.build()?;
    let dim = sig.len();
    if level == 0 || level > dim {
        return Err(CoreError::Level { level, max: dim });
    }
    let particles = map_range(ExecMode::default(), m, |i| {
        let mut rng = seeds::rng_for(seeds::derive(seed, seeds::stream::PRIOR), i as u64);
        let mut x = vec![0.0; dim];
        for (j, xj) in x.iter_mut().enumerate().take(level) {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *xj = sig[j] * xi;
        }
        x
    });
    PriorEnsemble::new_checked(
        ensemble_id("kl", level, m, seed),
        ParticleSpace::Coeffs {
            basis_id: basis_id.to_string(),
        },
        level,
        particles,
        seed,
        None,
    )
}

/// Orthogonal projection onto the first `level` coordinates: zeroes every
/// coordinate at index `>= level`. Idempotent, and nested projections
/// compose to the finer-of-the-two rule `min(m, n)`.
pub fn project_level(ens: &PriorEnsemble, level: usize) -> Result<PriorEnsemble> {
    match &ens.space {
        ParticleSpace::Coeffs { .. } => {}
        ParticleSpace::Paths { .. } => {
            return Err(CoreError::Support(
                "projection applies to coefficient ensembles".into(),
            ))
        }
    }
    let dim = ens.dim();
    if level > dim {
        return Err(CoreError::Level { level, max: dim });
    }
    let particles = ens
        .particles
        .iter()
        .map(|p| {
            let mut q = p.clone();
            for v in q.iter_mut().skip(level) {
                *v = 0.0;
            }
            q
        })
        .collect();
    let new_level = ens.level.min(level);
    PriorEnsemble::new_checked(
        format!("{}-p{level}", ens.id),
        ens.space.clone(),
        new_level,
        particles,
        ens.seed,
        ens.scales.clone(),
    )
}

/// Pointwise deformation applied to a Brownian path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointwiseMap {
    Identity,
    /// `f(t) = t^2`.
    Square,
    /// `f(t) = min(t, 1)`.
    Clip,
}

impl PointwiseMap {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            PointwiseMap::Identity => v,
            PointwiseMap::Square => v * v,
            PointwiseMap::Clip => v.min(1.0),
        }
    }
}

/// A Brownian skeleton on a fine master grid, shared across levels so that
/// refining the knot count reuses the same randomness.
fn master_brownian(seed: u64, index: usize, master_cells: usize, horizon: f64) -> Vec<f64> {
    let mut rng = seeds::rng_for(seeds::derive(seed, seeds::stream::PRIOR), index as u64);
    let dt = horizon / master_cells as f64;
    let mut b = Vec::with_capacity(master_cells + 1);
    b.push(0.0);
    for j in 1..=master_cells {
        let xi: f64 = StandardNormal.sample(&mut rng);
        b.push(b[j - 1] + dt.sqrt() * xi);
    }
    b
}

fn check_level_divides(level: usize, master_cells: usize) -> Result<()> {
    if level == 0 || !master_cells.is_multiple_of(level) {
        return Err(CoreError::Level {
            level,
            max: master_cells,
        });
    }
    Ok(())
}

/// Deformed-Brownian prior: `x(t) = f(b_level(t))` where `b_level` is the
/// piecewise-linear interpolation of a shared Brownian skeleton through
/// `level + 1` knots. Values at knot times equal `f(B_knot)` exactly.
pub fn sample_gaussian_map(
    map: PointwiseMap,
    level: usize,
    master_cells: usize,
    horizon: f64,
    m: usize,
    seed: u64,
) -> Result<PriorEnsemble> {
    check_level_divides(level, master_cells)?;
    let times = uniform_times(master_cells, horizon)?;
    let stride = master_cells / level;
    let particles = map_range(ExecMode::default(), m, |i| {
        let b = master_brownian(seed, i, master_cells, horizon);
        let mut values = Vec::with_capacity(times.len());
        for (j, _) in times.iter().enumerate() {
            let k0 = (j / stride) * stride;
            let interp = if j == k0 {
                b[j]
            } else {
                let k1 = k0 + stride;
                let w = (j - k0) as f64 / stride as f64;
                b[k0] * (1.0 - w) + b[k1] * w
            };
            values.push(map.apply(interp));
        }
        values
    });
    PriorEnsemble::new_checked(
        ensemble_id("gmap", level, m, seed),
        ParticleSpace::Paths { times },
        level,
        particles,
        seed,
        None,
    )
}

/// Integrand of a stochastic-integral prior, evaluated at the left cell
/// endpoint from the Brownian history (so it is adapted by construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrand {
    /// Constant integrand; `c = 1` reproduces the Brownian motion exactly.
    Const(f64),
    /// `f(t, omega) = sin(B_t)`.
    SinBrownian,
}

impl Integrand {
    fn eval(&self, b_left: f64) -> f64 {
        match self {
            Integrand::Const(c) => *c,
            Integrand::SinBrownian => b_left.sin(),
        }
    }
}

/// Stochastic-integral prior via left-point Euler sums on the level grid,
/// driven by a shared master Brownian skeleton:
/// `x(t_i) = sum_{j<=i} f(t_{j-1}) (B_{t_j} - B_{t_{j-1}})`, `x(0) = 0`.
pub fn sample_ito_prior(
    integrand: Integrand,
    level: usize,
    master_cells: usize,
    horizon: f64,
    m: usize,
    seed: u64,
) -> Result<PriorEnsemble> {
    check_level_divides(level, master_cells)?;
    let stride = master_cells / level;
    let times = uniform_times(level, horizon)?;
    let particles = map_range(ExecMode::default(), m, |i| {
        let b = master_brownian(seed, i, master_cells, horizon);
        let mut values = Vec::with_capacity(level + 1);
        values.push(0.0);
        for j in 1..=level {
            let left = b[(j - 1) * stride];
            let right = b[j * stride];
            values.push(values[j - 1] + integrand.eval(left) * (right - left));
        }
        values
    });
    PriorEnsemble::new_checked(
        ensemble_id("ito", level, m, seed),
        ParticleSpace::Paths { times },
        level,
        particles,
        seed,
        None,
    )
}

/// Hyperdensity of a scale-mixture prior on a bounded grid of cells.
/// Zero-width cells are atoms carrying their weight as point mass, which
/// lets spike hyperpriors be represented exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperDensity {
    /// Cell edges, nondecreasing, length `cells + 1`.
    pub edges: Vec<f64>,
    /// Density value on each positive-width cell; probability mass on each
    /// zero-width cell.
    pub weights: Vec<f64>,
}

impl HyperDensity {
    pub fn new(edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || weights.len() + 1 != edges.len() {
            return Err(CoreError::Model(
                "hyperdensity needs cells+1 edges and one weight per cell".into(),
            ));
        }
        if edges.windows(2).any(|w| w[1] < w[0]) {
            return Err(CoreError::Model("hyperdensity edges must be nondecreasing".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CoreError::Model("hyperdensity weights must be nonnegative".into()));
        }
        let hd = HyperDensity { edges, weights };
        let mass = hd.total_mass();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(CoreError::Model(format!(
                "hyperdensity mass is {mass}, must be 1 within 1e-6"
            )));
        }
        Ok(hd)
    }

    /// Single atom at `t`.
    pub fn atom(t: f64) -> Self {
        HyperDensity {
            edges: vec![t, t],
            weights: vec![1.0],
        }
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    fn cell_mass(&self, g: usize) -> f64 {
        let h = self.edges[g + 1] - self.edges[g];
        if h > 0.0 {
            self.weights[g] * h
        } else {
            self.weights[g]
        }
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.cells()).map(|g| self.cell_mass(g)).sum()
    }

    /// Inverse-CDF draw: pick the cell by cumulative mass, then place the
    /// point uniformly within it (density constant per cell).
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let mut cum = 0.0;
        for g in 0..self.cells() {
            let mass = self.cell_mass(g);
            if u <= cum + mass || g == self.cells() - 1 {
                let lo = self.edges[g];
                let hi = self.edges[g + 1];
                if hi <= lo || mass <= 0.0 {
                    return lo;
                }
                let frac = ((u - cum) / mass).clamp(0.0, 1.0);
                return lo + frac * (hi - lo);
            }
            cum += mass;
        }
        *self.edges.last().unwrap()
    }

    /// Density value at `t` (piecewise-constant cells; zero outside the
    /// grid, infinite on an atom).
    pub fn density_at(&self, t: f64) -> f64 {
        for g in 0..self.cells() {
            let (lo, hi) = (self.edges[g], self.edges[g + 1]);
            if hi > lo {
                let last = g == self.cells() - 1;
                if t >= lo && (t < hi || (last && t <= hi)) {
                    return self.weights[g];
                }
            } else if t == lo && self.weights[g] > 0.0 {
                return f64::INFINITY;
            }
        }
        0.0
    }

    /// `E[t^2]` by exact per-cell integration of the piecewise-constant
    /// density (atoms contribute `mass * t^2`).
    pub fn second_moment(&self) -> f64 {
        let mut acc = 0.0;
        for g in 0..self.cells() {
            let (lo, hi) = (self.edges[g], self.edges[g + 1]);
            if hi > lo {
                acc += self.weights[g] * (hi.powi(3) - lo.powi(3)) / 3.0;
            } else {
                acc += self.weights[g] * lo * lo;
            }
        }
        acc
    }
}

/// Scale-mixture prior: draw `t` from the hyperdensity and `z` from the
/// base Gaussian spectrum, emit `x = t * z`, recording `t` per particle.
pub fn sample_hierarchical(
    basis_id: &str,
    base_sigmas: &SigmaSpec,
    hyper: &HyperDensity,
    m: usize,
    seed: u64,
) -> Result<PriorEnsemble> {
    let sig = base_sigmas.build()?;
    let dim = sig.len();
    let draws: Vec<(f64, Vec<f64>)> = map_range(ExecMode::default(), m, |i| {
        let mut rng = seeds::rng_for(seeds::derive(seed, seeds::stream::HYPER), i as u64);
        let u: f64 = rng.gen_range(0.0..1.0);
        let t = hyper.inverse_cdf(u);
        let mut z = Vec::with_capacity(dim);
        for s in &sig {
            let xi: f64 = StandardNormal.sample(&mut rng);
            z.push(s * xi);
        }
        let x = z.iter().map(|zj| t * zj).collect();
        (t, x)
    });
    let (scales, particles): (Vec<f64>, Vec<Vec<f64>>) = draws.into_iter().unzip();
    PriorEnsemble::new_checked(
        ensemble_id("hier", hyper.cells(), m, seed),
        ParticleSpace::Coeffs {
            basis_id: basis_id.to_string(),
        },
        hyper.cells(),
        particles,
        seed,
        Some(scales),
    )
}

/// Per-coordinate marginal of a quasi-uniform ensemble, applied through
/// its inverse CDF to the low-discrepancy point.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalSpec {
    Uniform01,
    Gaussian { mean: f64, sd: f64 },
    /// Zero-mean Laplace with scale `b`.
    Laplace { b: f64 },
}

impl MarginalSpec {
    fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            MarginalSpec::Uniform01 => u,
            MarginalSpec::Gaussian { mean, sd } => {
                mean + sd * std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
            }
            MarginalSpec::Laplace { b } => {
                if u < 0.5 {
                    b * (2.0 * u).ln()
                } else {
                    -b * (2.0 * (1.0 - u)).ln()
                }
            }
        }
    }
}

/// First-dimension-onward direction numbers of the classic base-2 digital
/// sequence (dimension 1 is the van der Corput radical inverse).
/// `(degree, polynomial interior bits, initial direction numbers)`.
const SOBOL_TABLE: &[(u32, u32, &[u64])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
];

const SOBOL_BITS: u32 = 52;

fn sobol_directions(dim_index: usize) -> Vec<u64> {
    let mut v = vec![0u64; SOBOL_BITS as usize];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1u64 << (SOBOL_BITS - 1 - k as u32);
        }
        return v;
    }
    let (s, a, m_init) = SOBOL_TABLE[dim_index - 1];
    let s = s as usize;
    let mut m = vec![0u64; SOBOL_BITS as usize];
    m[..s].copy_from_slice(m_init);
    for k in s..SOBOL_BITS as usize {
        let mut mk = m[k - s] ^ (m[k - s] << s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                mk ^= m[k - j] << j;
            }
        }
        m[k] = mk;
    }
    for (k, vk) in v.iter_mut().enumerate() {
        *vk = m[k] << (SOBOL_BITS - 1 - k as u32);
    }
    v
}

/// Deterministic low-discrepancy points in `[0,1)^dim` (Gray-code order,
/// skipping the all-zero first point).
fn sobol_points(dim: usize, m: usize) -> Vec<Vec<f64>> {
    let dirs: Vec<Vec<u64>> = (0..dim).map(sobol_directions).collect();
    let scale = (1u64 << SOBOL_BITS) as f64;
    let mut state = vec![0u64; dim];
    let mut out = Vec::with_capacity(m);
    for n in 0..m {
        let c = (n as u64 + 1).trailing_zeros();
        for (d, st) in state.iter_mut().enumerate() {
            *st ^= dirs[d][c as usize];
        }
        out.push(state.iter().map(|&s| s as f64 / scale).collect());
    }
    out
}

/// Quasi-uniform prior: deterministic low-discrepancy points mapped
/// through per-coordinate inverse CDFs. No seed; repeatable bit-exactly.
pub fn sample_quasi_uniform(
    basis_id: &str,
    marginals: &[MarginalSpec],
    m: usize,
) -> Result<PriorEnsemble> {
    let dim = marginals.len();
    if dim == 0 {
        return Err(CoreError::Model("quasi-uniform prior needs >= 1 coordinate".into()));
    }
    if dim > SOBOL_TABLE.len() + 1 {
        return Err(CoreError::Model(format!(
            "quasi-uniform generator supports up to {} dimensions",
            SOBOL_TABLE.len() + 1
        )));
    }
    if m == 0 {
        return Err(CoreError::Model("quasi-uniform prior needs >= 1 point".into()));
    }
    let particles: Vec<Vec<f64>> = sobol_points(dim, m)
        .into_iter()
        .map(|pt| {
            pt.iter()
                .zip(marginals)
                .map(|(&u, spec)| spec.inverse_cdf(u.clamp(1e-15, 1.0 - 1e-15)))
                .collect()
        })
        .collect();
    PriorEnsemble::new_checked(
        ensemble_id("qu", dim, m, 0),
        ParticleSpace::Coeffs {
            basis_id: basis_id.to_string(),
        },
        dim,
        particles,
        0,
        None,
    )
}

/// View of an ensemble particle as a coefficient vector.
pub fn particle_coeffs(ens: &PriorEnsemble, index: usize) -> Result<CoeffVector> {
    match &ens.space {
        ParticleSpace::Coeffs { basis_id } => Ok(CoeffVector {
            basis_id: basis_id.clone(),
            coeffs: ens.particles[index].clone(),
        }),
        ParticleSpace::Paths { .. } => Err(CoreError::Support(
            "ensemble holds paths, not coefficients".into(),
        )),
    }
}

/// View of an ensemble particle as a path.
pub fn particle_path(ens: &PriorEnsemble, index: usize) -> Result<PathGrid> {
    match &ens.space {
        ParticleSpace::Paths { times } => {
            PathGrid::new(times.clone(), ens.particles[index].clone())
        }
        ParticleSpace::Coeffs { .. } => Err(CoreError::Support(
            "ensemble holds coefficients, not paths".into(),
        )),
    }
}

/// Hand L1 distance helper used by mixture diagnostics: `1/2 int |a - b|`
/// over a shared grid of cells.
pub fn half_l1_on_cells(a: &HyperDensity, b: &HyperDensity) -> Result<f64> {
    if a.edges != b.edges {
        return Err(CoreError::Grid("hyperdensities live on different grids".into()));
    }
    let mut acc = 0.0;
    for g in 0..a.cells() {
        let h = a.edges[g + 1] - a.edges[g];
        let d = (a.weights[g] - b.weights[g]).abs();
        acc += if h > 0.0 { 0.5 * d * h } else { 0.5 * d };
    }
    Ok(acc)
}
