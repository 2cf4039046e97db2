//! Experiment configuration schema.
//!
//! Configs are TOML with versioned keys; unknown keys are hard errors so a
//! typo can never silently change an experiment. The full key reference
//! lives in `docs/formats.md`.

use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub particles: usize,
    pub basis: BasisSpec,
    pub forward: ForwardSpec,
    pub noise: NoiseSpec,
    pub prior: PriorSpec,
    pub observation: ObservationSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub ladder: Option<LadderSpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum BasisSpec {
    /// Plain indexed basis with unit embedding weights.
    Indexed { dim: usize },
    /// Real trigonometric basis with `2 * modes + 1` coordinates and
    /// Sobolev `(1 + k^2)^{-1}` embedding weights.
    Fourier { modes: usize },
}

impl BasisSpec {
    pub fn dim(&self) -> usize {
        match self {
            BasisSpec::Indexed { dim } => *dim,
            BasisSpec::Fourier { modes } => 2 * modes + 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSpec {
    pub kind: ForwardKindSpec,
    /// Diagonal multipliers (diagonal kind).
    #[serde(default)]
    pub entries: Option<Vec<f64>>,
    /// Diagonal multipliers by decay `c_i = (1 + i)^{-p}` (alternative to
    /// an explicit list).
    #[serde(default)]
    pub decay_p: Option<f64>,
    /// Row-major matrix (dense kind).
    #[serde(default)]
    pub rows: Option<Vec<Vec<f64>>>,
    /// Optional bounded-range wrapper: each output coordinate passes
    /// through `c * tanh(v / c)`, keeping the forward range inside
    /// `[-c, c]` coordinatewise.
    #[serde(default)]
    pub saturate: Option<f64>,
    /// Optional rendering of range coefficients to a path observation on a
    /// uniform grid (sine dictionary vanishing at t = 0).
    #[serde(default)]
    pub path_render: Option<PathRenderSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardKindSpec {
    Diagonal,
    Dense,
    /// `L == 0`: the posterior must reproduce the prior.
    Zero,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathRenderSpec {
    pub points: usize,
    pub horizon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKindSpec,
    #[serde(default)]
    pub eigenvalues: Option<EigenSpec>,
    /// Laplace scale (laplace_fourier).
    #[serde(default)]
    pub b: Option<f64>,
    /// Spherical: number of estimator coordinates.
    #[serde(default)]
    pub estimator_terms: Option<usize>,
    /// Spherical: descriptive mixing-law label (metadata only).
    #[serde(default)]
    pub gamma_law: Option<String>,
    /// Spherical synthetic data: the true scale used to generate `y`.
    #[serde(default)]
    pub true_gamma: Option<f64>,
    /// Dominated box: restricted coordinates and bound.
    #[serde(default)]
    pub box_coords: Option<Vec<usize>>,
    #[serde(default)]
    pub box_bound: Option<f64>,
    /// Path noises: observation grid.
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Subordinated time-change model.
    #[serde(default)]
    pub alpha_shape: Option<f64>,
    #[serde(default)]
    pub alpha_rate: Option<f64>,
    #[serde(default)]
    pub alpha_floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindSpec {
    Gaussian,
    DominatedBox,
    Spherical,
    LaplaceFourier,
    Girsanov,
    Subordinated,
    FiniteDimNormal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum EigenSpec {
    Explicit { values: Vec<f64> },
    /// `lambda_i = (1 + i)^{-p}` over the basis dimension.
    Decay { p: f64 },
}

impl EigenSpec {
    pub fn build(&self, dim: usize) -> Vec<f64> {
        match self {
            EigenSpec::Explicit { values } => values.clone(),
            EigenSpec::Decay { p } => (0..dim).map(|i| (1.0 + i as f64).powf(-p)).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub scheme: PriorSchemeSpec,
    pub level: usize,
    #[serde(default)]
    pub sigmas: Option<SigmaSpecConfig>,
    /// Deformed-Brownian map.
    #[serde(default)]
    pub map: Option<MapSpec>,
    /// Shared master grid for path priors; levels must divide it.
    #[serde(default)]
    pub master_cells: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Stochastic-integral integrand.
    #[serde(default)]
    pub integrand: Option<IntegrandSpec>,
    /// Hierarchical hyperdensity (cell edges and weights).
    #[serde(default)]
    pub hyper_edges: Option<Vec<f64>>,
    #[serde(default)]
    pub hyper_weights: Option<Vec<f64>>,
    /// Quasi-uniform marginals, one per coordinate.
    #[serde(default)]
    pub marginals: Option<Vec<MarginalSpecConfig>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSchemeSpec {
    Kl,
    GaussianMap,
    Ito,
    Hierarchical,
    QuasiUniform,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum SigmaSpecConfig {
    Explicit { values: Vec<f64> },
    Decay { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    Square,
    Clip,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum IntegrandSpec {
    Const { c: f64 },
    SinBrownian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum MarginalSpecConfig {
    Uniform01,
    Gaussian { mean: f64, sd: f64 },
    Laplace { b: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub source: ObservationSource,
    #[serde(default)]
    pub true_x: Option<TrueXSpec>,
    /// CSV file with the observation (file source).
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationSource {
    Synthetic,
    File,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum TrueXSpec {
    /// Explicit coefficients in the domain basis.
    Coeffs { values: Vec<f64> },
    /// One draw from the prior (with a derived seed).
    Sample,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_out_dir(),
            formats: default_formats(),
        }
    }
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub levels: Vec<usize>,
    #[serde(default = "default_dict_size")]
    pub dictionary_size: usize,
    /// Uniform-integrability cutoffs; when absent a geometric grid scaled
    /// by the largest observed weight is used.
    #[serde(default)]
    pub ui_cutoffs: Option<Vec<f64>>,
}

fn default_dict_size() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub scales: Vec<f64>,
    /// Number of leading coordinate directions to perturb.
    pub directions: usize,
}

/// A config-level failure with enough context to locate the field.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError(format!(
            "schema_version: expected {SCHEMA_VERSION}, got {}",
            cfg.schema_version
        )));
    }
    if cfg.particles == 0 {
        return Err(ConfigError("particles: must be >= 1".into()));
    }
    if cfg.basis.dim() == 0 {
        return Err(ConfigError("basis: dimension must be >= 1".into()));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "t"
seed = 1
particles = 10

[basis]
kind = "indexed"
dim = 2

[forward]
kind = "diagonal"
entries = [1.0, 0.5]

[noise]
kind = "gaussian"
eigenvalues = { kind = "explicit", values = [1.0, 1.0] }

[prior]
scheme = "kl"
level = 2
sigmas = { kind = "explicit", values = [1.0, 1.0] }

[observation]
source = "synthetic"
true_x = { kind = "coeffs", values = [1.0, -0.5] }
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.name, "t");
        assert_eq!(cfg.basis.dim(), 2);
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let bad = MINIMAL.replace("[forward]", "[forward]\ntypo_key = 3");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.0.contains("typo_key"), "{}", err.0);
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 99");
        assert!(parse_config(&bad).is_err());
    }
}
