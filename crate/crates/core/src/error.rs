//! Error taxonomy shared by every module of the toolkit.

use thiserror::Error;

/// Errors raised by toolkit operations.
///
/// Degenerate outcomes that the theory treats as legal values (a `-inf`
/// log-weight, an all-excluded noise pattern) are *not* errors; they flow
/// through as zero weights or as `valid = false` posteriors. The variants
/// here signal contract violations or unusable inputs.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Two objects declared over different bases were combined.
    #[error("basis mismatch: expected `{expected}`, got `{got}`")]
    Basis { expected: String, got: String },

    /// A model was constructed with invalid parameters.
    #[error("invalid model: {0}")]
    Model(String),

    /// A value that must be finite (or `-inf` where documented) was not.
    #[error("non-finite value in {context}: {value}")]
    Numeric { context: &'static str, value: f64 },

    /// A path or grid did not cover the required domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A discretization level was out of range.
    #[error("level {level} out of range (max {max})")]
    Level { level: usize, max: usize },

    /// The estimated scale of a spherically invariant sample vanished; the
    /// observation sits where the defining limit is zero and no posterior
    /// can be formed from it.
    #[error("degenerate scale estimate {gamma_hat}; posterior undefined")]
    DegenerateScale { gamma_hat: f64 },

    /// An estimated time change was not strictly increasing and positive,
    /// so the induced covariance is singular.
    #[error("degenerate quadratic variation: {0}")]
    DegenerateQv(String),

    /// Every particle received zero weight: the observation behaves like a
    /// member of the excluded null set and the evidence is unusable.
    #[error("degenerate evidence: {0}")]
    DegenerateEvidence(String),

    /// Two particle measures do not share a common atom support.
    #[error("support mismatch: {0}")]
    Support(String),

    /// Two hyperdensities or paths were declared on different grids.
    #[error("grid mismatch: {0}")]
    Grid(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
