//! Desk-scale toolkit for Bayesian statistical inverse problems
//! `Y = L(X) + noise` on truncated function spaces.
//!
//! The posterior of the unknown given one observation `y` is represented as
//! a reweighting of a prior particle ensemble: each particle `x_i` gets the
//! weight `rho(x_i, y)`, the likelihood ratio of the translated noise law
//! against its reference measure, and the weighted ensemble is the
//! posterior. The crate provides
//!
//! - [`fspace`]: coefficient vectors, forward operators, path grids and the
//!   Cameron-Martin geometry they carry;
//! - [`noise`]: log likelihood-ratio constructions for Gaussian, dominated
//!   (including Girsanov drift), spherically invariant, subordinated,
//!   decomposable and finite-dimensional noise, plus synthetic samplers;
//! - [`priors`]: truncated series, deformed Brownian, stochastic-integral,
//!   hierarchical and quasi-uniform prior ensembles at nested levels;
//! - [`posterior`]: the self-normalized reweighting with log-domain
//!   arithmetic, evidence tracking and effective sample size;
//! - [`convergence`]: bounded-Lipschitz / setwise / variation distances
//!   between particle measures, uniform-integrability profiles, level
//!   ladders and observation-continuity probes.
//!
//! Everything is deterministic given explicit seeds: samplers derive
//! per-particle seeds, maps preserve index order, and reductions use a
//! fixed-order pairwise tree, so results are identical at any thread count.

// Validation guards use negated comparisons (`!(a > b)`) on purpose: they
// must reject NaN as well as out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod exec;
pub mod fspace;
pub mod noise;
pub mod posterior;
pub mod priors;
pub mod seeds;

pub use error::{CoreError, Result};
