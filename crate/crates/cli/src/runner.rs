//! Experiment stages: generation, posterior, level ladder, continuity
//! probe, and the full pipeline with its manifest.
//!
//! Every stage is deterministic given `(config, seed)` at any thread
//! count; only the manifest's wall-clock timings vary between reruns.

use crate::config::{ExperimentConfig, NoiseKindSpec, PriorSchemeSpec};
use crate::error::{CliError, CliResult};
use crate::io::{self, Artifact, RunManifest, Summary};
use crate::model::{
    bind_model, build_basis, check_prior_space, sample_prior, synthesize_observation,
    true_unknown, ForwardPipe, Observation, Weighter,
};
use fsbayes::convergence::{
    continuity_probe, decile_halfspaces, ui_profile, MeasureView, TestDictionary,
};
use fsbayes::posterior::{cm_estimate, compute_posterior, LogWeight};
use fsbayes::priors::{project_level, PriorEnsemble};
use std::path::Path;
use std::time::Instant;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shared experiment state assembled from a config.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub basis: fsbayes::fspace::Basis,
    pub forward: ForwardPipe,
    pub observation: Observation,
    pub true_x: Option<Vec<f64>>,
}

impl Experiment {
    pub fn assemble(cfg: ExperimentConfig) -> CliResult<Self> {
        let basis = build_basis(&cfg)?;
        let forward = ForwardPipe::build(&cfg, &basis)?;
        let (observation, true_x) = match cfg.observation.source {
            crate::config::ObservationSource::Synthetic => {
                let x = true_unknown(&cfg, &basis)?;
                let obs = synthesize_observation(&cfg, &basis, &forward, &x)?;
                (obs, Some(x))
            }
            crate::config::ObservationSource::File => {
                let path = cfg
                    .observation
                    .path
                    .clone()
                    .ok_or_else(|| CliError::Config("observation.path: required for file".into()))?;
                let text = std::fs::read_to_string(&path)?;
                (io::parse_observation_csv(&text)?, None)
            }
        };
        Ok(Experiment {
            cfg,
            basis,
            forward,
            observation,
            true_x,
        })
    }

    pub fn weighter(&self) -> CliResult<(Weighter, crate::model::BindingInfo)> {
        bind_model(
            &self.cfg,
            &self.basis,
            self.forward.clone(),
            &self.observation,
            None,
        )
    }

    /// Weighter with the path-to-coefficient bridge derived from the
    /// sampled ensemble, when the prior/noise pairing needs one.
    pub fn weighter_for(
        &self,
        ens: &PriorEnsemble,
    ) -> CliResult<(Weighter, crate::model::BindingInfo)> {
        let bridge = crate::model::bridge_for(&self.cfg, ens)?;
        bind_model(
            &self.cfg,
            &self.basis,
            self.forward.clone(),
            &self.observation,
            bridge,
        )
    }

    pub fn prior(&self) -> CliResult<PriorEnsemble> {
        sample_prior(
            &self.cfg,
            &self.basis,
            self.cfg.prior.level,
            self.cfg.particles,
            self.cfg.seed,
        )
    }
}

/// Writes the prior ensemble, the observation, and the true unknown.
pub fn stage_generate(exp: &Experiment, out: &Path) -> CliResult<Vec<Artifact>> {
    let mut artifacts = Vec::new();
    let ens = exp.prior()?;
    artifacts.push(io::write_artifact(out, "ensemble.csv", &io::ensemble_csv(&ens))?);
    artifacts.push(io::write_artifact(
        out,
        "observation.csv",
        &io::observation_csv(&exp.observation),
    )?);
    if let Some(x) = &exp.true_x {
        let mut csv = String::from("index,value\n");
        for (i, v) in x.iter().enumerate() {
            csv.push_str(&format!("{i},{}\n", io::fmt_f64(*v)));
        }
        artifacts.push(io::write_artifact(out, "true_x.csv", &csv)?);
    }
    Ok(artifacts)
}

/// Computes the posterior and writes weights, conditional mean and the
/// summary. Returns the artifacts and whether the posterior was valid.
pub fn stage_posterior(
    exp: &Experiment,
    out: &Path,
    cfg_hash: &str,
) -> CliResult<(Vec<Artifact>, bool)> {
    let ens = exp.prior()?;
    check_prior_space(&ens, crate::model::needs_bridge(&exp.cfg))?;
    let (weighter, info) = exp.weighter_for(&ens)?;
    let post = compute_posterior(&ens, &weighter)?;
    let mut artifacts = Vec::new();
    artifacts.push(io::write_artifact(out, "posterior.csv", &io::posterior_csv(&post))?);
    if post.valid {
        let cm = cm_estimate(&post, &ens)?;
        let mut csv = String::from("index,value\n");
        for (i, v) in cm.iter().enumerate() {
            csv.push_str(&format!("{i},{}\n", io::fmt_f64(*v)));
        }
        artifacts.push(io::write_artifact(out, "cm_estimate.csv", &csv)?);
    }
    let summary = Summary {
        name: exp.cfg.name.clone(),
        seed: exp.cfg.seed,
        particles: exp.cfg.particles,
        valid: post.valid,
        log_evidence: post.log_evidence,
        ess: post.ess,
        gamma_hat: info.gamma_hat,
        gamma_std_error: info.gamma_std_error,
        config_hash: cfg_hash.to_string(),
    };
    artifacts.push(io::write_artifact(out, "summary.json", &io::to_json(&summary)?)?);
    Ok((artifacts, post.valid))
}

/// Builds the level ladder (shared-skeleton projections of the finest
/// level) and the uniform-integrability profile.
pub fn stage_ladder(exp: &Experiment, out: &Path) -> CliResult<Vec<Artifact>> {
    let ladder = exp
        .cfg
        .ladder
        .clone()
        .ok_or_else(|| CliError::Config("[ladder]: section required for this stage".into()))?;
    if exp.cfg.prior.scheme != PriorSchemeSpec::Kl {
        return Err(CliError::Config(
            "[ladder]: level ladders are defined for the kl scheme (projection skeleton)".into(),
        ));
    }
    let levels = ladder.levels.clone();
    if levels.len() < 2 {
        return Err(CliError::Config("[ladder].levels: need at least two levels".into()));
    }
    let reference_level = *levels.last().unwrap();
    let master = sample_prior(
        &exp.cfg,
        &exp.basis,
        reference_level,
        exp.cfg.particles,
        exp.cfg.seed,
    )?;
    check_prior_space(&master, false)?;
    let (weighter, _) = exp.weighter()?;
    let dict = TestDictionary::generate(master.dim(), ladder.dictionary_size, exp.cfg.seed)
        .map_err(CliError::from)?;
    let report = fsbayes::convergence::convergence_ladder(
        &levels,
        |level| project_level(&master, level),
        &weighter,
        &dict,
    )?;

    // Uniform-integrability profile over the per-level ensembles.
    let projected: Vec<PriorEnsemble> = levels
        .iter()
        .map(|&l| project_level(&master, l))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&PriorEnsemble> = projected.iter().collect();
    let c_grid = match ladder.ui_cutoffs {
        Some(c) => c,
        None => {
            let max_rho = max_observed_rho(&refs, &weighter)?;
            [0.01, 0.1, 0.5, 1.0, 2.0, 10.0]
                .iter()
                .map(|f| f * max_rho)
                .collect()
        }
    };
    let tails = ui_profile(&refs, &weighter, &c_grid)?;

    let mut artifacts = vec![io::write_artifact(out, "ladder.csv", &io::report_csv(&report))?];
    artifacts.push(io::write_artifact(
        out,
        "ladder_bl.dat",
        &io::plot_data(&report.levels, &report.values),
    )?);
    artifacts.push(io::write_artifact(
        out,
        "ladder_cm.dat",
        &io::plot_data(&report.levels, &report.cm_gaps),
    )?);
    artifacts.push(io::write_artifact(out, "ui.csv", &io::ui_csv(&c_grid, &tails))?);
    artifacts.push(io::write_artifact(
        out,
        "ladder.json",
        &io::to_json(&io::ReportJson::from_report(&report, &c_grid, &tails))?,
    )?);
    Ok(artifacts)
}

fn max_observed_rho<W: LogWeight + ?Sized>(
    ensembles: &[&PriorEnsemble],
    model: &W,
) -> CliResult<f64> {
    let mut max_lw = f64::NEG_INFINITY;
    for ens in ensembles {
        for p in &ens.particles {
            let lw = model.log_weight(p)?;
            if lw > max_lw {
                max_lw = lw;
            }
        }
    }
    if max_lw == f64::NEG_INFINITY {
        return Err(CliError::Degenerate(
            "every particle is excluded; no weight scale to profile".into(),
        ));
    }
    Ok(max_lw.exp())
}

/// Observation-continuity probe along leading coordinate directions.
pub fn stage_probe(exp: &Experiment, out: &Path) -> CliResult<Vec<Artifact>> {
    let probe = exp
        .cfg
        .probe
        .clone()
        .ok_or_else(|| CliError::Config("[probe]: section required for this stage".into()))?;
    let y = match &exp.observation {
        Observation::Coeffs(y) => y.clone(),
        Observation::Path(_) => {
            return Err(CliError::Config(
                "[probe]: continuity probes are defined for coefficient observations".into(),
            ))
        }
    };
    let ens = exp.prior()?;
    let bridge = crate::model::bridge_for(&exp.cfg, &ens)?;
    check_prior_space(&ens, bridge.is_some())?;
    if probe.directions == 0 || probe.directions > y.len() {
        return Err(CliError::Config(format!(
            "[probe].directions: must be in 1..={}",
            y.len()
        )));
    }
    let directions: Vec<Vec<f64>> = (0..probe.directions)
        .map(|j| {
            let mut v = vec![0.0; y.len()];
            v[j] = 1.0;
            v
        })
        .collect();

    // Family: decile half-spaces of the unperturbed posterior.
    let (base_weighter, _) = exp.weighter_for(&ens)?;
    let base_post = compute_posterior(&ens, &base_weighter)?;
    if !base_post.valid {
        return Err(CliError::Degenerate(
            "posterior at the observed point is degenerate; nothing to probe".into(),
        ));
    }
    let base_view = MeasureView::posterior(&base_post, &ens)?;
    let coords: Vec<usize> = (0..ens.dim().min(3)).collect();
    let family = decile_halfspaces(&base_view, &coords);

    let cfg = exp.cfg.clone();
    let basis = exp.basis.clone();
    let forward = exp.forward.clone();
    let table = continuity_probe(
        &ens,
        |shift: &[f64]| {
            let shifted: Vec<f64> = y.iter().zip(shift).map(|(a, b)| a + b).collect();
            let (w, _) = bind_model(
                &cfg,
                &basis,
                forward.clone(),
                &Observation::Coeffs(shifted),
                bridge.clone(),
            )
            .map_err(|e| match e {
                CliError::Degenerate(msg) => fsbayes::CoreError::DegenerateEvidence(msg),
                other => fsbayes::CoreError::Model(other.to_string()),
            })?;
            Ok(Box::new(w) as Box<dyn LogWeight + Send + Sync>)
        },
        &directions,
        &probe.scales,
        &family,
    )?;
    Ok(vec![io::write_artifact(
        out,
        "probe.csv",
        &io::probe_csv(&table),
    )?])
}

/// The full pipeline: generate, posterior, optional ladder and probe, and
/// the manifest. A degenerate posterior still writes its diagnostic
/// artifacts before the degenerate status is returned.
pub fn run_experiment(cfg: ExperimentConfig, cfg_text: &str, out: &Path) -> CliResult<RunManifest> {
    let cfg_hash = io::config_hash(cfg_text);
    let exp = Experiment::assemble(cfg)?;
    let mut artifacts = Vec::new();
    let mut timings = Vec::new();

    let t0 = Instant::now();
    artifacts.extend(stage_generate(&exp, out)?);
    timings.push(("generate".to_string(), t0.elapsed().as_secs_f64()));

    let t1 = Instant::now();
    let (posterior_artifacts, valid) = stage_posterior(&exp, out, &cfg_hash)?;
    artifacts.extend(posterior_artifacts);
    timings.push(("posterior".to_string(), t1.elapsed().as_secs_f64()));

    if exp.cfg.ladder.is_some() {
        let t = Instant::now();
        artifacts.extend(stage_ladder(&exp, out)?);
        timings.push(("ladder".to_string(), t.elapsed().as_secs_f64()));
    }
    if exp.cfg.probe.is_some() {
        let t = Instant::now();
        artifacts.extend(stage_probe(&exp, out)?);
        timings.push(("probe".to_string(), t.elapsed().as_secs_f64()));
    }

    let manifest = RunManifest {
        config_hash: cfg_hash,
        toolkit_version: TOOLKIT_VERSION.to_string(),
        artifacts,
        timings_seconds: timings,
    };
    io::write_artifact(out, "manifest.json", &io::to_json(&manifest)?)?;
    if !valid {
        return Err(CliError::Degenerate(
            "posterior is degenerate; diagnostics written to summary.json".into(),
        ));
    }
    Ok(manifest)
}

/// Panics guard for interfaces that need every noise/prior combination to
/// have been validated already; kept for the subcommands.
pub fn validate_combination(cfg: &ExperimentConfig) -> CliResult<()> {
    if crate::model::is_path_noise(cfg.noise.kind) {
        let render = cfg
            .forward
            .path_render
            .as_ref()
            .ok_or_else(|| CliError::Config("forward.path_render: required for path noise".into()))?;
        let points = cfg
            .noise
            .points
            .ok_or_else(|| CliError::Config("noise.points: required for path noise".into()))?;
        let horizon = cfg
            .noise
            .horizon
            .ok_or_else(|| CliError::Config("noise.horizon: required for path noise".into()))?;
        if render.points != points || (render.horizon - horizon).abs() > 1e-12 {
            return Err(CliError::Config(
                "forward.path_render and the noise grid must agree on points and horizon".into(),
            ));
        }
    }
    if matches!(cfg.noise.kind, NoiseKindSpec::Spherical) {
        let terms = cfg
            .noise
            .estimator_terms
            .ok_or_else(|| CliError::Config("noise.estimator_terms: required".into()))?;
        if terms == 0 || terms > cfg.basis.dim() {
            return Err(CliError::Config(format!(
                "noise.estimator_terms: must be in 1..={}",
                cfg.basis.dim()
            )));
        }
    }
    Ok(())
}
