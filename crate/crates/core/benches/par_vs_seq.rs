//! Parallel vs sequential throughput of the particle-heavy operations:
//! posterior weight evaluation and prior sampling. Both paths produce
//! bit-identical results; this suite measures what the `parallel` feature
//! buys at desk-scale particle counts.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fsbayes::exec::ExecMode;
use fsbayes::noise::log_rho_gaussian_raw;
use fsbayes::posterior::compute_posterior_with;
use fsbayes::priors::{sample_kl, SigmaSpec};

fn bench_posterior_weights(c: &mut Criterion) {
    let dim = 32;
    let lam: Vec<f64> = (0..dim).map(|i| (1.0 + i as f64).powf(-1.0)).collect();
    let forward: Vec<f64> = lam.clone();
    let y: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin()).collect();
    let model = move |p: &[f64]| {
        let lx: Vec<f64> = p.iter().zip(&forward).map(|(x, c)| x * c).collect();
        log_rho_gaussian_raw(&lam, &lx, &y)
    };
    let mut group = c.benchmark_group("posterior_weights");
    for &m in &[10_000usize, 100_000] {
        let ens = sample_kl("b", &SigmaSpec::Decay { p: 1.0, dim }, dim, m, 7).unwrap();
        group.bench_with_input(BenchmarkId::new("sequential", m), &ens, |b, ens| {
            b.iter(|| compute_posterior_with(ExecMode::Sequential, ens, &model).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("parallel", m), &ens, |b, ens| {
            b.iter(|| compute_posterior_with(ExecMode::Parallel, ens, &model).unwrap())
        });
    }
    group.finish();
}

fn bench_prior_sampling(c: &mut Criterion) {
    // Sampling dispatches on the crate-level default mode, so the
    // comparison here is across particle counts; the map itself is the
    // same order-preserving primitive the posterior bench exercises.
    let mut group = c.benchmark_group("kl_sampling");
    for &m in &[10_000usize, 100_000] {
        group.bench_with_input(BenchmarkId::new("default_mode", m), &m, |b, &m| {
            b.iter(|| sample_kl("b", &SigmaSpec::Decay { p: 1.0, dim: 64 }, 64, m, 3).unwrap())
        });
    }
    group.finish();
}

fn bench_map_primitive(c: &mut Criterion) {
    let items: Vec<f64> = (0..200_000).map(|i| i as f64 * 1e-3).collect();
    let work = |_: usize, x: &f64| {
        let mut acc = *x;
        for _ in 0..32 {
            acc = (acc * 1.000001).sin() + 0.5;
        }
        acc
    };
    let mut group = c.benchmark_group("map_indexed");
    group.bench_function("sequential", |b| {
        b.iter(|| fsbayes::exec::map_indexed(ExecMode::Sequential, &items, work))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| fsbayes::exec::map_indexed(ExecMode::Parallel, &items, work))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_posterior_weights,
    bench_prior_sampling,
    bench_map_primitive
);
criterion_main!(benches);
