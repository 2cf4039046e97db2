//! Assembly of configured experiments: basis, forward pipeline, prior
//! sampler, synthetic observation, and the observation-bound weighter that
//! the posterior engine consumes.

use crate::config::*;
use crate::error::{CliError, CliResult};
use fsbayes::fspace::{apply_forward_raw, trapezoid, Basis, ForwardMap, PathGrid};
use fsbayes::noise::{
    estimate_gamma_detailed, girsanov_log_modifier, log_rho_finite_dim, log_rho_gaussian_raw, quadratic_variation, sample_brownian, AlphaModel, DecomposableNoise,
    DominatedModifier, FiniteDimDensity, FiniteDimNoise, GaussianNoise, SphericalNoise,
    SubordinatedNoise, SubordinatedSolver,
};
use fsbayes::posterior::LogWeight;
use fsbayes::priors::{
    sample_gaussian_map, sample_hierarchical, sample_ito_prior, sample_kl, sample_quasi_uniform,
    HyperDensity, Integrand, MarginalSpec, ParticleSpace, PointwiseMap, PriorEnsemble, SigmaSpec,
};
use fsbayes::fspace::CoeffVector;
use fsbayes::{seeds, Result as CoreResult};

pub fn build_basis(cfg: &ExperimentConfig) -> CliResult<Basis> {
    match &cfg.basis {
        BasisSpec::Indexed { dim } => {
            Basis::indexed("indexed", *dim).map_err(|e| CliError::Config(e.to_string()))
        }
        BasisSpec::Fourier { modes } => Ok(Basis::fourier(*modes)),
    }
}

/// Forward pipeline: linear map, optional range saturation, optional path
/// rendering.
#[derive(Debug, Clone)]
pub struct ForwardPipe {
    map: ForwardMap,
    saturate: Option<f64>,
}

impl ForwardPipe {
    pub fn build(cfg: &ExperimentConfig, basis: &Basis) -> CliResult<Self> {
        let dim = basis.dim;
        let map = match cfg.forward.kind {
            ForwardKindSpec::Diagonal => {
                let entries = match (&cfg.forward.entries, cfg.forward.decay_p) {
                    (Some(e), None) => e.clone(),
                    (None, Some(p)) => (0..dim).map(|i| (1.0 + i as f64).powf(-p)).collect(),
                    _ => {
                        return Err(CliError::Config(
                            "forward: diagonal needs exactly one of entries or decay_p".into(),
                        ))
                    }
                };
                if entries.len() != dim {
                    return Err(CliError::Config(format!(
                        "forward.entries: length {} must equal basis dim {dim}",
                        entries.len()
                    )));
                }
                ForwardMap::diagonal(&basis.id, &basis.id, entries)
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
            ForwardKindSpec::Zero => ForwardMap::diagonal(&basis.id, &basis.id, vec![0.0; dim])
                .map_err(|e| CliError::Config(e.to_string()))?,
            ForwardKindSpec::Dense => {
                let rows = cfg
                    .forward
                    .rows
                    .clone()
                    .ok_or_else(|| CliError::Config("forward.rows: required for dense".into()))?;
                let nrows = rows.len();
                if nrows == 0 || rows.iter().any(|r| r.len() != dim) {
                    return Err(CliError::Config(format!(
                        "forward.rows: every row must have basis dim {dim} entries"
                    )));
                }
                let flat: Vec<f64> = rows.into_iter().flatten().collect();
                ForwardMap::dense(&basis.id, &basis.id, nrows, dim, flat)
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        if let Some(c) = cfg.forward.saturate {
            if !(c.is_finite() && c > 0.0) {
                return Err(CliError::Config("forward.saturate: must be positive".into()));
            }
        }
        Ok(ForwardPipe {
            map,
            saturate: cfg.forward.saturate,
        })
    }

    pub fn range_dim(&self) -> usize {
        self.map.range_dim()
    }

    /// Applies the linear map and the optional saturation.
    pub fn apply(&self, x: &[f64]) -> CoreResult<Vec<f64>> {
        let mut out = apply_forward_raw(&self.map, x)?;
        if let Some(c) = self.saturate {
            for v in out.iter_mut() {
                *v = c * (*v / c).tanh();
            }
        }
        Ok(out)
    }
}

/// Sine dictionary rendering of range coefficients to a path vanishing at
/// time zero: `value(t) = sum_j c_j sin((j+1) pi t / (2 T))`.
pub fn render_sine(coeffs: &[f64], times: &[f64], horizon: f64) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let mut acc = 0.0;
            for (j, c) in coeffs.iter().enumerate() {
                acc += c * ((j as f64 + 1.0) * std::f64::consts::PI * t / (2.0 * horizon)).sin();
            }
            acc
        })
        .collect()
}

/// An observation in the model's native space.
#[derive(Debug, Clone)]
pub enum Observation {
    Coeffs(Vec<f64>),
    Path(PathGrid),
}

/// Bridge from path particles to trigonometric coefficients: path-valued
/// priors feeding a spectral (coefficient-space) noise model pass each
/// particle through `trig_coeffs` on the prior's own grid.
#[derive(Debug, Clone)]
pub struct BridgeSpec {
    pub times: Vec<f64>,
    pub max_mode: usize,
}

impl BridgeSpec {
    pub fn to_coeffs(&self, path_values: &[f64]) -> CoreResult<Vec<f64>> {
        let path = PathGrid::new(self.times.clone(), path_values.to_vec())?;
        Ok(fsbayes::fspace::trig_coeffs(&path, self.max_mode)?.coeffs)
    }
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Whether the configured prior/noise pairing needs the trigonometric
/// bridge (path particles, coefficient-space noise).
pub fn needs_bridge(cfg: &ExperimentConfig) -> bool {
    matches!(
        cfg.prior.scheme,
        PriorSchemeSpec::GaussianMap | PriorSchemeSpec::Ito
    ) && !is_path_noise(cfg.noise.kind)
}

/// Builds the bridge for a sampled path ensemble; requires the
/// trigonometric basis and a grid spanning one period.
pub fn bridge_for(cfg: &ExperimentConfig, ens: &PriorEnsemble) -> CliResult<Option<BridgeSpec>> {
    if !needs_bridge(cfg) {
        return Ok(None);
    }
    let max_mode = match cfg.basis {
        BasisSpec::Fourier { modes } => modes,
        BasisSpec::Indexed { .. } => {
            return Err(CliError::Config(
                "a path prior with a spectral noise model needs the fourier basis".into(),
            ))
        }
    };
    let times = match &ens.space {
        ParticleSpace::Paths { times } => times.clone(),
        ParticleSpace::Coeffs { .. } => {
            return Err(CliError::Config(
                "bridge configured but the prior produced coefficients".into(),
            ))
        }
    };
    if (times.last().unwrap() - TWO_PI).abs() > 1e-9 {
        return Err(CliError::Config(format!(
            "prior.horizon: the trigonometric bridge needs one period (2*pi), got {}",
            times.last().unwrap()
        )));
    }
    Ok(Some(BridgeSpec { times, max_mode }))
}

/// Fully assembled noise model, bound to one observation.
pub enum BoundModel {
    Gaussian {
        noise: GaussianNoise,
        y: Vec<f64>,
    },
    DominatedBox {
        noise: GaussianNoise,
        modifier: DominatedModifier,
        y: Vec<f64>,
    },
    Spherical {
        noise: SphericalNoise,
        gamma_hat: f64,
        y: Vec<f64>,
    },
    LaplaceFourier {
        b: f64,
        y: Vec<f64>,
    },
    FiniteDim {
        noise: FiniteDimNoise,
        y: Vec<f64>,
    },
    Girsanov {
        solver: SubordinatedSolver,
        horizon: f64,
        y: PathGrid,
    },
    Subordinated {
        solver: SubordinatedSolver,
        y: PathGrid,
    },
}

/// The per-particle evaluator handed to the posterior engine: optional
/// path-to-coefficient bridge, forward pipeline, optional rendering, then
/// the noise model's log ratio.
pub struct Weighter {
    pub forward: ForwardPipe,
    pub render: Option<PathRenderSpec>,
    pub bridge: Option<BridgeSpec>,
    pub model: BoundModel,
}

impl Weighter {
    fn domain_coeffs(&self, particle: &[f64]) -> CoreResult<Vec<f64>> {
        match &self.bridge {
            Some(bridge) => bridge.to_coeffs(particle),
            None => Ok(particle.to_vec()),
        }
    }

    fn lx_path_values(&self, x: &[f64], times: &[f64]) -> CoreResult<Vec<f64>> {
        let lx = self.forward.apply(x)?;
        let render = self
            .render
            .as_ref()
            .expect("path models are built with a renderer");
        Ok(render_sine(&lx, times, render.horizon))
    }
}

impl LogWeight for Weighter {
    fn log_weight(&self, raw_particle: &[f64]) -> CoreResult<f64> {
        let bridged;
        let particle: &[f64] = match &self.bridge {
            Some(_) => {
                bridged = self.domain_coeffs(raw_particle)?;
                &bridged
            }
            None => raw_particle,
        };
        match &self.model {
            BoundModel::Gaussian { noise, y } => {
                let lx = self.forward.apply(particle)?;
                log_rho_gaussian_raw(&noise.eigenvalues, &lx, y)
            }
            BoundModel::DominatedBox { noise, modifier, y } => {
                let lx = self.forward.apply(particle)?;
                let diff: Vec<f64> = y.iter().zip(&lx).map(|(a, b)| a - b).collect();
                let lf = modifier.log_factor_coeffs(noise, &diff)?;
                if lf == f64::NEG_INFINITY {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(lf + log_rho_gaussian_raw(&noise.eigenvalues, &lx, y)?)
            }
            BoundModel::Spherical { noise, gamma_hat, y } => {
                let lx = self.forward.apply(particle)?;
                let lam = &noise.base.eigenvalues;
                let inv2 = 1.0 / (gamma_hat * gamma_hat);
                let pairing = fsbayes::fspace::dual_pairing(y, &lx, lam)?;
                let norm = fsbayes::fspace::cm_norm_sq(&lx, lam)?;
                Ok(inv2 * pairing - (0.5 * inv2) * norm)
            }
            BoundModel::LaplaceFourier { b, y } => {
                let lx = self.forward.apply(particle)?;
                let terms = fsbayes::noise::laplace_fourier_terms(*b, &lx, y)?;
                Ok(terms.iter().sum())
            }
            BoundModel::FiniteDim { noise, y } => {
                let lx = self.forward.apply(particle)?;
                log_rho_finite_dim(noise, &lx, y)
            }
            BoundModel::Girsanov { solver, horizon, y } => {
                let lx_vals = self.lx_path_values(particle, solver.times())?;
                let diff_vals: Vec<f64> =
                    y.values.iter().zip(&lx_vals).map(|(a, b)| a - b).collect();
                let diff = PathGrid::new(solver.times().to_vec(), diff_vals)?;
                let lf = girsanov_log_modifier(&diff, *horizon)?;
                if lf == f64::NEG_INFINITY {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(lf + solver.log_rho_values(&lx_vals, &y.values)?)
            }
            BoundModel::Subordinated { solver, y } => {
                let lx_vals = self.lx_path_values(particle, solver.times())?;
                solver.log_rho_values(&lx_vals, &y.values)
            }
        }
    }
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> CliResult<T> {
    v.clone()
        .ok_or_else(|| CliError::Config(format!("{key}: required for this kind")))
}

fn eigenvalues_for(cfg: &ExperimentConfig, dim: usize) -> CliResult<Vec<f64>> {
    let spec = need(&cfg.noise.eigenvalues, "noise.eigenvalues")?;
    let lam = spec.build(dim);
    if lam.len() != dim {
        return Err(CliError::Config(format!(
            "noise.eigenvalues: got {} values, basis dim is {dim}",
            lam.len()
        )));
    }
    Ok(lam)
}

fn path_grid_times(cfg: &ExperimentConfig) -> CliResult<(Vec<f64>, f64)> {
    let points = need(&cfg.noise.points, "noise.points")?;
    let horizon = need(&cfg.noise.horizon, "noise.horizon")?;
    let times = fsbayes::fspace::uniform_times(points, horizon)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((times, horizon))
}

fn render_spec(cfg: &ExperimentConfig) -> CliResult<PathRenderSpec> {
    cfg.forward
        .path_render
        .clone()
        .ok_or_else(|| CliError::Config("forward.path_render: required for path noise".into()))
}

/// Whether the configured noise observes paths rather than coefficients.
pub fn is_path_noise(kind: NoiseKindSpec) -> bool {
    matches!(kind, NoiseKindSpec::Girsanov | NoiseKindSpec::Subordinated)
}

/// Samples the configured prior at an explicit level.
pub fn sample_prior(
    cfg: &ExperimentConfig,
    basis: &Basis,
    level: usize,
    m: usize,
    seed: u64,
) -> CliResult<PriorEnsemble> {
    let sigma_spec = || -> CliResult<SigmaSpec> {
        match need(&cfg.prior.sigmas, "prior.sigmas")? {
            SigmaSpecConfig::Explicit { values } => {
                if values.len() != basis.dim {
                    return Err(CliError::Config(format!(
                        "prior.sigmas: {} values, basis dim {}",
                        values.len(),
                        basis.dim
                    )));
                }
                Ok(SigmaSpec::Explicit(values))
            }
            SigmaSpecConfig::Decay { p } => Ok(SigmaSpec::Decay { p, dim: basis.dim }),
        }
    };
    let ens = match cfg.prior.scheme {
        PriorSchemeSpec::Kl => sample_kl(&basis.id, &sigma_spec()?, level, m, seed)?,
        PriorSchemeSpec::GaussianMap => {
            let map = match need(&cfg.prior.map, "prior.map")? {
                MapSpec::Identity => PointwiseMap::Identity,
                MapSpec::Square => PointwiseMap::Square,
                MapSpec::Clip => PointwiseMap::Clip,
            };
            let master = need(&cfg.prior.master_cells, "prior.master_cells")?;
            let horizon = need(&cfg.prior.horizon, "prior.horizon")?;
            sample_gaussian_map(map, level, master, horizon, m, seed)?
        }
        PriorSchemeSpec::Ito => {
            let integrand = match need(&cfg.prior.integrand, "prior.integrand")? {
                IntegrandSpec::Const { c } => Integrand::Const(c),
                IntegrandSpec::SinBrownian => Integrand::SinBrownian,
            };
            let master = need(&cfg.prior.master_cells, "prior.master_cells")?;
            let horizon = need(&cfg.prior.horizon, "prior.horizon")?;
            sample_ito_prior(integrand, level, master, horizon, m, seed)?
        }
        PriorSchemeSpec::Hierarchical => {
            let edges = need(&cfg.prior.hyper_edges, "prior.hyper_edges")?;
            let weights = need(&cfg.prior.hyper_weights, "prior.hyper_weights")?;
            let hyper = HyperDensity::new(edges, weights)?;
            sample_hierarchical(&basis.id, &sigma_spec()?, &hyper, m, seed)?
        }
        PriorSchemeSpec::QuasiUniform => {
            let marginals: Vec<MarginalSpec> = need(&cfg.prior.marginals, "prior.marginals")?
                .into_iter()
                .map(|s| match s {
                    MarginalSpecConfig::Uniform01 => MarginalSpec::Uniform01,
                    MarginalSpecConfig::Gaussian { mean, sd } => MarginalSpec::Gaussian { mean, sd },
                    MarginalSpecConfig::Laplace { b } => MarginalSpec::Laplace { b },
                })
                .collect();
            if marginals.len() != basis.dim {
                return Err(CliError::Config(format!(
                    "prior.marginals: {} entries, basis dim {}",
                    marginals.len(),
                    basis.dim
                )));
            }
            sample_quasi_uniform(&basis.id, &marginals, m)?
        }
    };
    Ok(ens)
}

/// The true unknown used for synthetic data.
pub fn true_unknown(cfg: &ExperimentConfig, basis: &Basis) -> CliResult<Vec<f64>> {
    match cfg
        .observation
        .true_x
        .as_ref()
        .ok_or_else(|| CliError::Config("observation.true_x: required for synthetic".into()))?
    {
        TrueXSpec::Coeffs { values } => {
            if values.len() != basis.dim {
                return Err(CliError::Config(format!(
                    "observation.true_x: {} values, basis dim {}",
                    values.len(),
                    basis.dim
                )));
            }
            Ok(values.clone())
        }
        TrueXSpec::Sample => {
            let ens = sample_prior(
                cfg,
                basis,
                cfg.prior.level,
                1,
                seeds::derive(cfg.seed, seeds::stream::TRUE_X),
            )?;
            match &ens.space {
                ParticleSpace::Coeffs { .. } => Ok(ens.particles[0].clone()),
                ParticleSpace::Paths { .. } => match bridge_for(cfg, &ens)? {
                    Some(bridge) => Ok(bridge.to_coeffs(&ens.particles[0])?),
                    None => Err(CliError::Config(
                        "observation.true_x: sampled truth needs a coefficient prior or the \
                         trigonometric bridge"
                            .into(),
                    )),
                },
            }
        }
    }
}

/// Synthesizes `y = L(x*) + noise` in the model's native space.
pub fn synthesize_observation(
    cfg: &ExperimentConfig,
    basis: &Basis,
    forward: &ForwardPipe,
    x_true: &[f64],
) -> CliResult<Observation> {
    let noise_seed = seeds::derive(cfg.seed, seeds::stream::NOISE);
    let lx = forward.apply(x_true)?;
    match cfg.noise.kind {
        NoiseKindSpec::Gaussian => {
            let lam = eigenvalues_for(cfg, forward.range_dim())?;
            let noise = GaussianNoise::new(&basis.id, lam)?;
            let eps = noise.sample(noise_seed);
            Ok(Observation::Coeffs(add(&lx, &eps.coeffs)))
        }
        NoiseKindSpec::DominatedBox => {
            let lam = eigenvalues_for(cfg, forward.range_dim())?;
            let noise = GaussianNoise::new(&basis.id, lam)?;
            let coords = need(&cfg.noise.box_coords, "noise.box_coords")?;
            let bound = need(&cfg.noise.box_bound, "noise.box_bound")?;
            // Rejection sampling of the restricted noise; deterministic
            // attempt sequence.
            for attempt in 0..100_000u64 {
                let eps = noise.sample(seeds::derive(noise_seed, attempt));
                if coords.iter().all(|&i| eps.coeffs[i].abs() <= bound) {
                    return Ok(Observation::Coeffs(add(&lx, &eps.coeffs)));
                }
            }
            Err(CliError::Config(
                "noise.box_bound: restricted noise has negligible mass; synthesis failed".into(),
            ))
        }
        NoiseKindSpec::Spherical => {
            let lam = eigenvalues_for(cfg, forward.range_dim())?;
            let terms = need(&cfg.noise.estimator_terms, "noise.estimator_terms")?;
            let label = cfg.noise.gamma_law.clone().unwrap_or_default();
            let noise = SphericalNoise::new(GaussianNoise::new(&basis.id, lam)?, terms, label)?;
            let gamma = need(&cfg.noise.true_gamma, "noise.true_gamma")?;
            let eps = noise.sample_scaled(gamma, noise_seed);
            Ok(Observation::Coeffs(add(&lx, &eps.coeffs)))
        }
        NoiseKindSpec::LaplaceFourier => {
            let b = need(&cfg.noise.b, "noise.b")?;
            let noise = DecomposableNoise::laplace(&basis.id, forward.range_dim(), b)?;
            let eps = noise.sample(noise_seed);
            Ok(Observation::Coeffs(add(&lx, &eps.coeffs)))
        }
        NoiseKindSpec::FiniteDimNormal => {
            let noise = FiniteDimNoise::new(forward.range_dim(), FiniteDimDensity::StdNormal)?;
            let eps = noise.sample(noise_seed)?;
            Ok(Observation::Coeffs(add(&lx, &eps)))
        }
        NoiseKindSpec::Girsanov => {
            let (times, horizon) = path_grid_times(cfg)?;
            let render = render_spec(cfg)?;
            let lx_vals = render_sine(&lx, &times, render.horizon);
            let brownian = sample_brownian(&times, noise_seed)?;
            // Drifted path: eps + int_0^t 2 eps_s / (1 + eps_s^2) ds.
            let drift_rate: Vec<f64> = brownian
                .values
                .iter()
                .map(|&v| 2.0 * v / (1.0 + v * v))
                .collect();
            let mut values = Vec::with_capacity(times.len());
            for j in 0..times.len() {
                let cum = trapezoid(&times[..=j], &drift_rate[..=j]);
                values.push(lx_vals[j] + brownian.values[j] + cum);
            }
            let _ = horizon;
            Ok(Observation::Path(PathGrid::new(times, values)?))
        }
        NoiseKindSpec::Subordinated => {
            let (times, _) = path_grid_times(cfg)?;
            let render = render_spec(cfg)?;
            let lx_vals = render_sine(&lx, &times, render.horizon);
            let alpha = AlphaModel::new(
                need(&cfg.noise.alpha_shape, "noise.alpha_shape")?,
                need(&cfg.noise.alpha_rate, "noise.alpha_rate")?,
                need(&cfg.noise.alpha_floor, "noise.alpha_floor")?,
            )?;
            let noise = SubordinatedNoise::new(times.clone(), alpha)?;
            let eps = noise.sample(noise_seed);
            let values: Vec<f64> = lx_vals.iter().zip(&eps.values).map(|(a, b)| a + b).collect();
            Ok(Observation::Path(PathGrid::new(times, values)?))
        }
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Extra facts the binding step learns about the observation, surfaced in
/// the run summary.
#[derive(Debug, Clone, Default)]
pub struct BindingInfo {
    pub gamma_hat: Option<f64>,
    pub gamma_std_error: Option<f64>,
}

/// Binds the configured noise model to an observation, producing the
/// weighter the posterior engine consumes. `bridge` converts path
/// particles to domain coefficients when the prior is path-valued.
pub fn bind_model(
    cfg: &ExperimentConfig,
    basis: &Basis,
    forward: ForwardPipe,
    obs: &Observation,
    bridge: Option<BridgeSpec>,
) -> CliResult<(Weighter, BindingInfo)> {
    let mut info = BindingInfo::default();
    let coeff_obs = |obs: &Observation| -> CliResult<Vec<f64>> {
        match obs {
            Observation::Coeffs(y) => {
                if y.len() != forward.range_dim() {
                    return Err(CliError::Config(format!(
                        "observation has {} coordinates, forward range is {}",
                        y.len(),
                        forward.range_dim()
                    )));
                }
                Ok(y.clone())
            }
            Observation::Path(_) => Err(CliError::Config(
                "this noise kind observes coefficients, got a path".into(),
            )),
        }
    };
    let path_obs = |obs: &Observation| -> CliResult<PathGrid> {
        match obs {
            Observation::Path(p) => Ok(p.clone()),
            Observation::Coeffs(_) => Err(CliError::Config(
                "this noise kind observes paths, got coefficients".into(),
            )),
        }
    };

    let model = match cfg.noise.kind {
        NoiseKindSpec::Gaussian => {
            let lam = eigenvalues_for(cfg, forward.range_dim())?;
            BoundModel::Gaussian {
                noise: GaussianNoise::new(&basis.id, lam)?,
                y: coeff_obs(obs)?,
            }
        }
        NoiseKindSpec::DominatedBox => {
            let lam = eigenvalues_for(cfg, forward.range_dim())?;
            let coords = need(&cfg.noise.box_coords, "noise.box_coords")?;
            let bound = need(&cfg.noise.box_bound, "noise.box_bound")?;
            BoundModel::DominatedBox {
                noise: GaussianNoise::new(&basis.id, lam)?,
                modifier: DominatedModifier::box_restriction(coords, bound)?,
                y: coeff_obs(obs)?,
            }
        }
        NoiseKindSpec::Spherical => {
            let lam = eigenvalues_for(cfg, forward.range_dim())?;
            let terms = need(&cfg.noise.estimator_terms, "noise.estimator_terms")?;
            let label = cfg.noise.gamma_law.clone().unwrap_or_default();
            let noise = SphericalNoise::new(GaussianNoise::new(&basis.id, lam)?, terms, label)?;
            let y = coeff_obs(obs)?;
            let y_vec = CoeffVector::new(&basis.id, y.clone())?;
            let est = estimate_gamma_detailed(&y_vec, &noise)?;
            if est.gamma_hat < fsbayes::noise::DEGENERATE_SCALE_THRESHOLD {
                return Err(CliError::Degenerate(format!(
                    "estimated noise scale {} vanishes; observation sits where the defining limit is zero",
                    est.gamma_hat
                )));
            }
            info.gamma_hat = Some(est.gamma_hat);
            info.gamma_std_error = Some(est.std_error);
            BoundModel::Spherical {
                noise,
                gamma_hat: est.gamma_hat,
                y,
            }
        }
        NoiseKindSpec::LaplaceFourier => BoundModel::LaplaceFourier {
            b: need(&cfg.noise.b, "noise.b")?,
            y: coeff_obs(obs)?,
        },
        NoiseKindSpec::FiniteDimNormal => BoundModel::FiniteDim {
            noise: FiniteDimNoise::new(forward.range_dim(), FiniteDimDensity::StdNormal)?,
            y: coeff_obs(obs)?,
        },
        NoiseKindSpec::Girsanov => {
            let y = path_obs(obs)?;
            let horizon = need(&cfg.noise.horizon, "noise.horizon")?;
            let identity = PathGrid::new(y.times.clone(), y.times.clone())?;
            BoundModel::Girsanov {
                solver: SubordinatedSolver::new(&identity)?,
                horizon,
                y,
            }
        }
        NoiseKindSpec::Subordinated => {
            let y = path_obs(obs)?;
            let alpha_hat = quadratic_variation(&y)?;
            BoundModel::Subordinated {
                solver: SubordinatedSolver::new(&alpha_hat)?,
                y,
            }
        }
    };

    let render = if is_path_noise(cfg.noise.kind) {
        Some(render_spec(cfg)?)
    } else {
        None
    };
    Ok((
        Weighter {
            forward,
            render,
            bridge,
            model,
        },
        info,
    ))
}

/// Checks that the prior yields particles the weighter can consume:
/// coefficients directly, or paths through the trigonometric bridge.
pub fn check_prior_space(ens: &PriorEnsemble, bridged: bool) -> CliResult<()> {
    match ens.space {
        ParticleSpace::Coeffs { .. } => Ok(()),
        ParticleSpace::Paths { .. } if bridged => Ok(()),
        ParticleSpace::Paths { .. } => Err(CliError::Config(
            "posterior stages need coefficient particles; path priors feed spectral noise \
             through the trigonometric bridge (fourier basis, one-period grid), and path \
             observations go through forward.path_render"
                .into(),
        )),
    }
}
