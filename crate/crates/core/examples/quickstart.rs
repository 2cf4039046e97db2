//! Minimal library walkthrough: a two-coordinate Gaussian problem,
//! a truncated-series prior, and the reweighted posterior.

use fsbayes::noise::{log_rho_gaussian_raw, GaussianNoise};
use fsbayes::posterior::{cm_estimate, compute_posterior};
use fsbayes::priors::{sample_kl, SigmaSpec};

fn main() -> fsbayes::Result<()> {
    let lam = vec![1.0, 1.0];
    let noise = GaussianNoise::new("b", lam.clone())?;
    let y = noise.sample(7).coeffs; // stand-in observation
    let ens = sample_kl("b", &SigmaSpec::Explicit(vec![1.0, 1.0]), 2, 10_000, 42)?;
    let post = compute_posterior(&ens, &|p: &[f64]| {
        let lx = [p[0], 0.5 * p[1]];
        log_rho_gaussian_raw(&lam, &lx, &y)
    })?;
    let mean = cm_estimate(&post, &ens)?;
    println!("posterior mean: {mean:?}, ess: {:.0}", post.ess);
    Ok(())
}
