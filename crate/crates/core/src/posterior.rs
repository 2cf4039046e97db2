//! The generalized Bayes formula as a self-normalized particle
//! reweighting.
//!
//! Given a prior ensemble and a noise model's log likelihood-ratio, each
//! particle receives the weight `rho(x_i, y)`; normalizing yields the
//! posterior as a weighted particle measure. All arithmetic stays in the
//! log domain with a max-shifted summation, `-inf` log-weights flow
//! through as zero weights, and an all-`-inf` ensemble is reported as a
//! degenerate (not erroneous) posterior: the empirical face of an
//! observation from the excluded null set.

use crate::error::{CoreError, Result};
use crate::exec::{map_indexed, pairwise_sum, pairwise_weighted_sum, ExecMode};
use crate::fspace::CoeffVector;
use crate::priors::{ParticleSpace, PriorEnsemble};

/// A noise model bound to one observation: evaluates `log rho(x, y)` on a
/// particle's native coordinates (coefficients or path values).
pub trait LogWeight: Sync {
    fn log_weight(&self, particle: &[f64]) -> Result<f64>;
}

impl<F> LogWeight for F
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn log_weight(&self, particle: &[f64]) -> Result<f64> {
        self(particle)
    }
}

/// The reweighted ensemble: log-weights (`-inf` allowed), normalized
/// weights, log-evidence and effective sample size. `valid == false` means
/// every particle was excluded and no posterior exists for this
/// observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorParticles {
    pub ensemble_ref: String,
    pub log_weights: Vec<f64>,
    pub norm_weights: Vec<f64>,
    pub log_evidence: f64,
    pub ess: f64,
    pub valid: bool,
}

impl PosteriorParticles {
    /// Normalizes raw log-weights. The evidence is
    /// `max + ln(sum exp(lw - max)) - ln M`, the self-normalized estimate
    /// of the integral of `rho` against the prior.
    pub fn from_log_weights(ensemble_ref: impl Into<String>, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(CoreError::Model("posterior needs at least one particle".into()));
        }
        for &lw in &log_weights {
            if lw.is_nan() || lw == f64::INFINITY {
                return Err(CoreError::Numeric {
                    context: "log-weight",
                    value: lw,
                });
            }
        }
        let m = log_weights.len();
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Ok(PosteriorParticles {
                ensemble_ref: ensemble_ref.into(),
                log_weights,
                norm_weights: vec![0.0; m],
                log_evidence: f64::NEG_INFINITY,
                ess: 0.0,
                valid: false,
            });
        }
        let shifted: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total = pairwise_sum(&shifted);
        let norm_weights: Vec<f64> = shifted.iter().map(|e| e / total).collect();
        let log_evidence = max + (total.ln() - (m as f64).ln());
        let sq: Vec<f64> = norm_weights.iter().map(|w| w * w).collect();
        let ess = 1.0 / pairwise_sum(&sq);
        Ok(PosteriorParticles {
            ensemble_ref: ensemble_ref.into(),
            log_weights,
            norm_weights,
            log_evidence,
            ess,
            valid: true,
        })
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    fn check_valid(&self) -> Result<()> {
        if !self.valid {
            return Err(CoreError::DegenerateEvidence(
                "all particles carry zero weight".into(),
            ));
        }
        Ok(())
    }

    fn check_ref(&self, ens: &PriorEnsemble) -> Result<()> {
        if self.ensemble_ref != ens.id {
            return Err(CoreError::Support(format!(
                "posterior reweights `{}`, got ensemble `{}`",
                self.ensemble_ref, ens.id
            )));
        }
        if self.len() != ens.len() {
            return Err(CoreError::Support(format!(
                "particle count mismatch: {} weights, {} particles",
                self.len(),
                ens.len()
            )));
        }
        Ok(())
    }
}

/// Reweights the ensemble by the model's likelihood-ratio at the bound
/// observation.
pub fn compute_posterior<W: LogWeight + ?Sized>(
    ens: &PriorEnsemble,
    model: &W,
) -> Result<PosteriorParticles> {
    compute_posterior_with(ExecMode::default(), ens, model)
}

/// [`compute_posterior`] with an explicit execution mode. Results are
/// bit-identical across modes and worker counts: the particle map is
/// order-preserving and the reduction is a fixed-order pairwise sum.
pub fn compute_posterior_with<W: LogWeight + ?Sized>(
    mode: ExecMode,
    ens: &PriorEnsemble,
    model: &W,
) -> Result<PosteriorParticles> {
    if ens.is_empty() {
        return Err(CoreError::Model("ensemble is empty".into()));
    }
    let evals = map_indexed(mode, &ens.particles, |_, p| model.log_weight(p));
    let mut log_weights = Vec::with_capacity(evals.len());
    for e in evals {
        log_weights.push(e?);
    }
    PosteriorParticles::from_log_weights(ens.id.clone(), log_weights)
}

/// Conditional-mean estimate `sum_i w_i x_i` in the ensemble's native
/// coordinates (coefficients or grid values).
pub fn cm_estimate(post: &PosteriorParticles, ens: &PriorEnsemble) -> Result<Vec<f64>> {
    post.check_valid()?;
    post.check_ref(ens)?;
    let dim = ens.dim();
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        out.push(pairwise_weighted_sum(&post.norm_weights, &|i| {
            ens.particles[i][j]
        }));
    }
    Ok(out)
}

/// [`cm_estimate`] packaged as a coefficient vector; errors on path
/// ensembles.
pub fn cm_estimate_coeffs(post: &PosteriorParticles, ens: &PriorEnsemble) -> Result<CoeffVector> {
    let values = cm_estimate(post, ens)?;
    match &ens.space {
        ParticleSpace::Coeffs { basis_id } => Ok(CoeffVector {
            basis_id: basis_id.clone(),
            coeffs: values,
        }),
        ParticleSpace::Paths { .. } => Err(CoreError::Support(
            "ensemble holds paths; use cm_estimate for grid values".into(),
        )),
    }
}

/// Posterior probability of the event `predicate`, as the weight mass of
/// the particles inside it.
pub fn posterior_probability<P: Fn(&[f64]) -> bool>(
    post: &PosteriorParticles,
    ens: &PriorEnsemble,
    predicate: P,
) -> Result<f64> {
    post.check_valid()?;
    post.check_ref(ens)?;
    Ok(pairwise_weighted_sum(&post.norm_weights, &|i| {
        if predicate(&ens.particles[i]) {
            1.0
        } else {
            0.0
        }
    }))
}

/// Posterior expectation `sum_i w_i g(x_i)` of a functional.
pub fn posterior_functional<G: Fn(&[f64]) -> f64>(
    post: &PosteriorParticles,
    ens: &PriorEnsemble,
    g: G,
) -> Result<f64> {
    post.check_valid()?;
    post.check_ref(ens)?;
    for p in &ens.particles {
        let v = g(p);
        if !v.is_finite() {
            return Err(CoreError::Numeric {
                context: "posterior functional",
                value: v,
            });
        }
    }
    Ok(pairwise_weighted_sum(&post.norm_weights, &|i| {
        g(&ens.particles[i])
    }))
}

/// Effective sample size `1 / sum_i w_i^2`, between 1 and the particle
/// count for a valid posterior.
pub fn ess(post: &PosteriorParticles) -> f64 {
    post.ess
}

/// Componentwise Monte-Carlo standard error of the self-normalized
/// conditional-mean estimate:
/// `se_j^2 = sum_i w_i^2 (x_ij - cm_j)^2`.
pub fn cm_standard_error(post: &PosteriorParticles, ens: &PriorEnsemble) -> Result<Vec<f64>> {
    let cm = cm_estimate(post, ens)?;
    let dim = ens.dim();
    let mut out = Vec::with_capacity(dim);
    for (j, cmj) in cm.iter().enumerate() {
        let mut acc = 0.0;
        for (i, w) in post.norm_weights.iter().enumerate() {
            let d = ens.particles[i][j] - cmj;
            acc += w * w * d * d;
        }
        out.push(acc.sqrt());
    }
    let _ = dim;
    Ok(out)
}
