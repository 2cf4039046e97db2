//! Empirical convergence and well-posedness diagnostics.
//!
//! Weak convergence is probed against a finite random dictionary of
//! bounded-Lipschitz functionals (a reproducible lower-bound surrogate for
//! the supremum over all bounded continuous functions), variation distance
//! is exact on a shared atom support, and the uniform-integrability
//! profile mirrors the tail condition under which reweighted measures
//! inherit the convergence of their priors. Ladders rebuild the posterior
//! from a shared particle skeleton per level, so level-to-level
//! differences isolate discretization error from Monte Carlo error.

use crate::error::{CoreError, Result};
use crate::exec::{map_indexed, pairwise_weighted_sum, ExecMode};
use crate::posterior::{cm_estimate, compute_posterior, LogWeight, PosteriorParticles};
use crate::priors::{half_l1_on_cells, HyperDensity, ParticleSpace, PriorEnsemble};
use crate::seeds;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A Borel set represented as a membership predicate on particles.
pub type SetPredicate = Box<dyn Fn(&[f64]) -> bool + Sync>;

/// A reproducible dictionary of test functionals
/// `f_j(x) = tanh(<x, alpha_j> + c_j)` with `||alpha_j|| <= 1` and
/// `|c_j| <= 1`: each entry is bounded by 1 and 1-Lipschitz.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDictionary {
    pub entries: Vec<(Vec<f64>, f64)>,
    pub seed: u64,
}

impl TestDictionary {
    pub fn generate(dim: usize, count: usize, seed: u64) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(CoreError::Model("dictionary needs dim >= 1 and count >= 1".into()));
        }
        let mut entries = Vec::with_capacity(count);
        for j in 0..count {
            let mut rng = seeds::rng_for(seeds::derive(seed, seeds::stream::DICTIONARY), j as u64);
            let mut alpha: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
            let radius: f64 = rng.gen_range(0.0..1.0);
            if norm > 0.0 {
                for a in alpha.iter_mut() {
                    *a *= radius / norm;
                }
            }
            let c: f64 = rng.gen_range(-1.0..1.0);
            entries.push((alpha, c));
        }
        Ok(TestDictionary { entries, seed })
    }

    pub fn eval(&self, j: usize, x: &[f64]) -> f64 {
        let (alpha, c) = &self.entries[j];
        let dot: f64 = alpha.iter().zip(x).map(|(a, b)| a * b).sum();
        (dot + c).tanh()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A weighted particle measure: a prior ensemble (uniform weights) or a
/// posterior reweighting of one.
#[derive(Clone, Copy)]
pub struct MeasureView<'a> {
    pub space: &'a ParticleSpace,
    pub particles: &'a [Vec<f64>],
    pub weights: Option<&'a [f64]>,
}

impl<'a> MeasureView<'a> {
    pub fn prior(ens: &'a PriorEnsemble) -> Self {
        MeasureView {
            space: &ens.space,
            particles: &ens.particles,
            weights: None,
        }
    }

    pub fn posterior(post: &'a PosteriorParticles, ens: &'a PriorEnsemble) -> Result<Self> {
        if !post.valid {
            return Err(CoreError::DegenerateEvidence(
                "cannot view a degenerate posterior as a measure".into(),
            ));
        }
        if post.ensemble_ref != ens.id || post.len() != ens.len() {
            return Err(CoreError::Support(format!(
                "posterior reweights `{}`, got `{}`",
                post.ensemble_ref, ens.id
            )));
        }
        Ok(MeasureView {
            space: &ens.space,
            particles: &ens.particles,
            weights: Some(&post.norm_weights),
        })
    }

    /// Expectation of `g` under the measure.
    pub fn expect<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        match self.weights {
            Some(w) => pairwise_weighted_sum(w, &|i| g(&self.particles[i])),
            None => {
                let m = self.particles.len();
                let w = vec![1.0 / m as f64; m];
                pairwise_weighted_sum(&w, &|i| g(&self.particles[i]))
            }
        }
    }

    fn check_same_space(&self, other: &MeasureView) -> Result<()> {
        let ok = match (self.space, other.space) {
            (ParticleSpace::Coeffs { basis_id: a }, ParticleSpace::Coeffs { basis_id: b }) => a == b,
            (ParticleSpace::Paths { times: a }, ParticleSpace::Paths { times: b }) => a == b,
            _ => false,
        };
        if !ok {
            return Err(CoreError::Basis {
                expected: describe_space(self.space),
                got: describe_space(other.space),
            });
        }
        Ok(())
    }
}

fn describe_space(s: &ParticleSpace) -> String {
    match s {
        ParticleSpace::Coeffs { basis_id } => format!("coeffs[{basis_id}]"),
        ParticleSpace::Paths { times } => format!("paths[{} pts]", times.len()),
    }
}

/// Bounded-Lipschitz surrogate distance:
/// `max_j | E_p f_j - E_q f_j |` over the dictionary. A pseudometric with
/// values in `[0, 2]`.
pub fn bl_distance(p: &MeasureView, q: &MeasureView, dict: &TestDictionary) -> Result<f64> {
    p.check_same_space(q)?;
    let mut best: f64 = 0.0;
    for j in 0..dict.len() {
        let a = p.expect(|x| dict.eval(j, x));
        let b = q.expect(|x| dict.eval(j, x));
        best = best.max((a - b).abs());
    }
    Ok(best)
}

/// Exact variation distance between two reweightings of the same ensemble:
/// `1/2 sum_i |w_i - w'_i|`.
pub fn tv_particle(p: &PosteriorParticles, q: &PosteriorParticles) -> Result<f64> {
    if p.ensemble_ref != q.ensemble_ref || p.len() != q.len() {
        return Err(CoreError::Support(format!(
            "variation distance needs a shared ensemble: `{}` vs `{}`",
            p.ensemble_ref, q.ensemble_ref
        )));
    }
    let mut acc = 0.0;
    for (a, b) in p.norm_weights.iter().zip(&q.norm_weights) {
        acc += (a - b).abs();
    }
    Ok(0.5 * acc)
}

/// Upper bound for the variation distance between two scale mixtures with
/// hyperdensities on a shared grid: `1/2 int |lambda_n - lambda|`.
pub fn tv_mixture(lambda_n: &HyperDensity, lambda: &HyperDensity) -> Result<f64> {
    half_l1_on_cells(lambda_n, lambda)
}

/// Setwise surrogate distance: `max_U |p(U) - q(U)|` over a finite family
/// of predicates.
pub fn setwise_distance(
    p: &MeasureView,
    q: &MeasureView,
    family: &[SetPredicate],
) -> Result<f64> {
    p.check_same_space(q)?;
    let mut best: f64 = 0.0;
    for pred in family {
        let a = p.expect(|x| if pred(x) { 1.0 } else { 0.0 });
        let b = q.expect(|x| if pred(x) { 1.0 } else { 0.0 });
        best = best.max((a - b).abs());
    }
    Ok(best)
}

/// Coordinate half-space family `{x : x_j <= q}` at the deciles of the
/// reference measure, a measure-determining class on the truncation.
pub fn decile_halfspaces(
    reference: &MeasureView,
    coords: &[usize],
) -> Vec<SetPredicate> {
    let mut family: Vec<SetPredicate> = Vec::new();
    for &j in coords {
        let mut values: Vec<f64> = reference.particles.iter().map(|p| p[j]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for d in 1..10 {
            let q = values[(d * values.len()) / 10];
            family.push(Box::new(move |x: &[f64]| x[j] <= q));
        }
    }
    family
}

/// Empirical uniform-integrability profile: for each cutoff `C`, the
/// largest (over the given ensembles) empirical mean of
/// `rho * 1{rho > C}`. Nonincreasing in `C` by nested tail sets.
pub fn ui_profile<W: LogWeight + ?Sized>(
    ensembles: &[&PriorEnsemble],
    model: &W,
    c_grid: &[f64],
) -> Result<Vec<f64>> {
    if ensembles.is_empty() {
        return Err(CoreError::Model("ui_profile needs at least one ensemble".into()));
    }
    if c_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CoreError::Model("cutoff grid must be strictly increasing".into()));
    }
    let mut rho_per_ens = Vec::with_capacity(ensembles.len());
    for ens in ensembles {
        let evals = map_indexed(ExecMode::default(), &ens.particles, |_, p| {
            model.log_weight(p)
        });
        let mut rho = Vec::with_capacity(evals.len());
        for e in evals {
            rho.push(e?.exp());
        }
        rho_per_ens.push(rho);
    }
    let mut profile = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let mut sup: f64 = 0.0;
        for rho in &rho_per_ens {
            let m = rho.len();
            let w = vec![1.0 / m as f64; m];
            let tail = pairwise_weighted_sum(&w, &|i| if rho[i] > c { rho[i] } else { 0.0 });
            sup = sup.max(tail);
        }
        profile.push(sup);
    }
    Ok(profile)
}

/// Per-level distances of a discretization ladder to its finest level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    pub metric_name: String,
    /// Bounded-Lipschitz distance of each level's posterior to the
    /// reference posterior; NaN where the level was degenerate.
    pub values: Vec<f64>,
    /// Euclidean gap between each level's conditional mean and the
    /// reference one; NaN where degenerate.
    pub cm_gaps: Vec<f64>,
    /// Degenerate-evidence flag per level.
    pub degenerate: Vec<bool>,
    pub dictionary_seed: u64,
    pub notes: String,
}

/// Builds the posterior at every level from a shared skeleton (the
/// `build` closure must derive each level from common randomness) and
/// reports each level's distance to the finest one.
pub fn convergence_ladder<W, B>(
    levels: &[usize],
    build: B,
    model: &W,
    dict: &TestDictionary,
) -> Result<ConvergenceReport>
where
    W: LogWeight + ?Sized,
    B: Fn(usize) -> Result<PriorEnsemble>,
{
    if levels.len() < 2 {
        return Err(CoreError::Model("ladder needs at least two levels".into()));
    }
    if levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CoreError::Model("ladder levels must be strictly increasing".into()));
    }
    let mut ensembles = Vec::with_capacity(levels.len());
    let mut posts = Vec::with_capacity(levels.len());
    for &level in levels {
        let ens = build(level)?;
        let post = compute_posterior(&ens, model)?;
        ensembles.push(ens);
        posts.push(post);
    }
    let reference_post = posts.last().unwrap();
    let reference_ens = ensembles.last().unwrap();
    if !reference_post.valid {
        return Err(CoreError::DegenerateEvidence(
            "reference level posterior is degenerate".into(),
        ));
    }
    let ref_view = MeasureView::posterior(reference_post, reference_ens)?;
    let ref_cm = cm_estimate(reference_post, reference_ens)?;

    let mut values = Vec::with_capacity(levels.len());
    let mut cm_gaps = Vec::with_capacity(levels.len());
    let mut degenerate = Vec::with_capacity(levels.len());
    for (post, ens) in posts.iter().zip(&ensembles) {
        if !post.valid {
            values.push(f64::NAN);
            cm_gaps.push(f64::NAN);
            degenerate.push(true);
            continue;
        }
        let view = MeasureView::posterior(post, ens)?;
        values.push(bl_distance(&view, &ref_view, dict)?);
        let cm = cm_estimate(post, ens)?;
        let gap = cm
            .iter()
            .zip(&ref_cm)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        cm_gaps.push(gap);
        degenerate.push(false);
    }
    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        metric_name: "bl_to_reference".into(),
        values,
        cm_gaps,
        degenerate,
        dictionary_seed: dict.seed,
        notes: String::new(),
    })
}

/// Observation-continuity probe: the setwise modulus of the posterior
/// under perturbed observations `y + delta * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTable {
    pub scales: Vec<f64>,
    /// `moduli[d][s]` is the modulus for direction `d` at scale `s`;
    /// NaN where the perturbed posterior was degenerate.
    pub moduli: Vec<Vec<f64>>,
    pub degenerate: Vec<Vec<bool>>,
}

/// Evaluates `max_U | mu(U, y + delta v) - mu(U, y) |` for every direction
/// and scale. `model_at` receives the observation perturbation (the zero
/// vector for the base point). A degenerate perturbed posterior is
/// recorded, not thrown.
pub fn continuity_probe<F>(
    ens: &PriorEnsemble,
    model_at: F,
    directions: &[Vec<f64>],
    scales: &[f64],
    family: &[SetPredicate],
) -> Result<ProbeTable>
where
    F: Fn(&[f64]) -> Result<Box<dyn LogWeight + Send + Sync>>,
{
    let obs_dim = directions.first().map_or(0, |v| v.len());
    let base_model = model_at(&vec![0.0; obs_dim])?;
    let base_post = compute_posterior(ens, base_model.as_ref())?;
    if !base_post.valid {
        return Err(CoreError::DegenerateEvidence(
            "posterior at the unperturbed observation is degenerate".into(),
        ));
    }
    let base_view = MeasureView::posterior(&base_post, ens)?;
    let mut moduli = Vec::with_capacity(directions.len());
    let mut degenerate = Vec::with_capacity(directions.len());
    for v in directions {
        let mut row = Vec::with_capacity(scales.len());
        let mut flags = Vec::with_capacity(scales.len());
        for &delta in scales {
            let shift: Vec<f64> = v.iter().map(|vi| delta * vi).collect();
            // A degenerate model or posterior at the perturbed point is a
            // recorded observation, not a failure of the probe.
            let model = match model_at(&shift) {
                Ok(m) => m,
                Err(
                    CoreError::DegenerateEvidence(_)
                    | CoreError::DegenerateScale { .. }
                    | CoreError::DegenerateQv(_),
                ) => {
                    row.push(f64::NAN);
                    flags.push(true);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let post = compute_posterior(ens, model.as_ref())?;
            if !post.valid {
                row.push(f64::NAN);
                flags.push(true);
                continue;
            }
            let view = MeasureView::posterior(&post, ens)?;
            row.push(setwise_distance(&view, &base_view, family)?);
            flags.push(false);
        }
        moduli.push(row);
        degenerate.push(flags);
    }
    Ok(ProbeTable {
        scales: scales.to_vec(),
        moduli,
        degenerate,
    })
}
