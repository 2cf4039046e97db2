//! Execution strategy for per-particle work.
//!
//! All heavy loops in the crate are embarrassingly parallel maps over
//! particles followed by a reduction. Maps preserve index order, and every
//! reduction is a fixed-order pairwise sum, so results are bit-identical
//! at any worker count and with the `parallel` feature on or off.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a per-particle map should be executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Plain sequential loop.
    Sequential,
    /// Rayon work-stealing pool when the `parallel` feature is enabled;
    /// silently falls back to sequential otherwise.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Index-order-preserving map over a slice.
pub fn map_indexed<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    match mode {
        ExecMode::Sequential => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
            }
        }
    }
}

/// Index-order-preserving map over `0..n`.
pub fn map_range<U, F>(mode: ExecMode, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(f).collect()
            }
        }
    }
}

/// Fixed-order pairwise summation.
///
/// The reduction tree depends only on the slice length, never on worker
/// count, so sums are reproducible while still controlling rounding error
/// growth on long inputs.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Weighted pairwise sum `sum_i w[i] * g(i)` with the same fixed tree as
/// [`pairwise_sum`].
pub fn pairwise_weighted_sum<F: Fn(usize) -> f64>(weights: &[f64], g: &F) -> f64 {
    fn go<F: Fn(usize) -> f64>(weights: &[f64], offset: usize, g: &F) -> f64 {
        const BASE: usize = 32;
        if weights.len() <= BASE {
            let mut acc = 0.0;
            for (j, &w) in weights.iter().enumerate() {
                acc += w * g(offset + j);
            }
            return acc;
        }
        let mid = weights.len() / 2;
        go(&weights[..mid], offset, g) + go(&weights[mid..], offset + mid, g)
    }
    go(weights, 0, g)
}

/// Runs `f` inside a dedicated pool of `threads` workers (when the
/// `parallel` feature is on), so callers can pin the worker count without
/// touching the global pool. `threads = None` uses the default pool.
pub fn run_with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool construction")
                .install(f),
            None => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
