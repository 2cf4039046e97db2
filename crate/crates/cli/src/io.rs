//! Artifact emission: CSV with fixed 17-significant-digit formatting (so
//! every f64 round-trips bit-exactly), JSON summaries with stable field
//! order, and a manifest with checksums of everything written.

use crate::error::{CliError, CliResult};
use fsbayes::convergence::{ConvergenceReport, ProbeTable};
use fsbayes::posterior::PosteriorParticles;
use fsbayes::priors::{ParticleSpace, PriorEnsemble};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Formats an f64 with 17 significant digits; round-trips exactly,
/// including infinities.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One emitted file.
#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes bytes and records the artifact checksum.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> CliResult<Artifact> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    let mut hasher = Sha256::new();
    hasher.update(contents.as_bytes());
    Ok(Artifact {
        path: path.to_string_lossy().into_owned(),
        sha256: format!("{:x}", hasher.finalize()),
        bytes: contents.len() as u64,
    })
}

/// Ensemble CSV: `particle_index,x0,...` (or grid values for paths); a
/// leading comment row carries the space so import can rebuild it.
pub fn ensemble_csv(ens: &PriorEnsemble) -> String {
    let dim = ens.dim();
    let mut out = String::new();
    match &ens.space {
        ParticleSpace::Coeffs { basis_id } => {
            out.push_str(&format!("# space=coeffs basis={basis_id} id={}\n", ens.id));
        }
        ParticleSpace::Paths { times } => {
            let ts: Vec<String> = times.iter().map(|t| fmt_f64(*t)).collect();
            out.push_str(&format!("# space=paths id={} times={}\n", ens.id, ts.join(";")));
        }
    }
    out.push_str("particle_index");
    for j in 0..dim {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for (i, p) in ens.particles.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in p {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses an ensemble CSV back; bit-exact round trip.
pub fn parse_ensemble_csv(text: &str) -> CliResult<PriorEnsemble> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io("empty ensemble file".into()))?;
    if !header.starts_with('#') {
        return Err(CliError::Io("ensemble file is missing its space header".into()));
    }
    let mut id = String::new();
    let mut space: Option<ParticleSpace> = None;
    for token in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = token.strip_prefix("id=") {
            id = v.to_string();
        } else if let Some(v) = token.strip_prefix("basis=") {
            space = Some(ParticleSpace::Coeffs {
                basis_id: v.to_string(),
            });
        } else if let Some(v) = token.strip_prefix("times=") {
            let times: Result<Vec<f64>, _> = v.split(';').map(|t| t.parse::<f64>()).collect();
            space = Some(ParticleSpace::Paths {
                times: times.map_err(|e| CliError::Io(format!("bad times: {e}")))?,
            });
        }
    }
    let space = space.ok_or_else(|| CliError::Io("ensemble header lacks a space".into()))?;
    let _column_row = lines.next();
    let mut particles = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let _idx = fields.next();
        let row: Result<Vec<f64>, _> = fields.map(|f| f.parse::<f64>()).collect();
        particles.push(row.map_err(|e| CliError::Io(format!("bad value: {e}")))?);
    }
    Ok(PriorEnsemble {
        id,
        space,
        level: 0,
        particles,
        seed: 0,
        scales: None,
    })
}

/// Posterior CSV: `particle_index,log_weight,norm_weight`.
pub fn posterior_csv(post: &PosteriorParticles) -> String {
    let mut out = String::from("particle_index,log_weight,norm_weight\n");
    for i in 0..post.len() {
        out.push_str(&format!(
            "{i},{},{}\n",
            fmt_f64(post.log_weights[i]),
            fmt_f64(post.norm_weights[i])
        ));
    }
    out
}

/// Observation CSV: `index,value` for coefficients, `time,value` for paths.
pub fn observation_csv(obs: &crate::model::Observation) -> String {
    match obs {
        crate::model::Observation::Coeffs(y) => {
            let mut out = String::from("index,value\n");
            for (i, v) in y.iter().enumerate() {
                out.push_str(&format!("{i},{}\n", fmt_f64(*v)));
            }
            out
        }
        crate::model::Observation::Path(p) => {
            let mut out = String::from("time,value\n");
            for (t, v) in p.times.iter().zip(&p.values) {
                out.push_str(&format!("{},{}\n", fmt_f64(*t), fmt_f64(*v)));
            }
            out
        }
    }
}

/// Parses an observation CSV by its header row.
pub fn parse_observation_csv(text: &str) -> CliResult<crate::model::Observation> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io("empty observation file".into()))?;
    let is_path = header.starts_with("time");
    let mut first = Vec::new();
    let mut second = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let a = fields
            .next()
            .ok_or_else(|| CliError::Io("short observation row".into()))?;
        let b = fields
            .next()
            .ok_or_else(|| CliError::Io("short observation row".into()))?;
        first.push(a.parse::<f64>().map_err(|e| CliError::Io(e.to_string()))?);
        second.push(b.parse::<f64>().map_err(|e| CliError::Io(e.to_string()))?);
    }
    if is_path {
        Ok(crate::model::Observation::Path(
            fsbayes::fspace::PathGrid::new(first, second)?,
        ))
    } else {
        Ok(crate::model::Observation::Coeffs(second))
    }
}

/// Ladder report CSV: `level,metric,value` rows.
pub fn report_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("level,metric,value\n");
    for (i, &level) in report.levels.iter().enumerate() {
        out.push_str(&format!(
            "{level},{},{}\n",
            report.metric_name,
            fmt_f64(report.values[i])
        ));
        out.push_str(&format!("{level},cm_gap,{}\n", fmt_f64(report.cm_gaps[i])));
        out.push_str(&format!(
            "{level},degenerate,{}\n",
            if report.degenerate[i] { 1 } else { 0 }
        ));
    }
    out
}

/// JSON mirror of a ladder report.
#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub levels: Vec<usize>,
    pub metric_name: String,
    pub values: Vec<f64>,
    pub cm_gaps: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub dictionary_seed: u64,
    pub notes: String,
    pub ui_cutoffs: Vec<f64>,
    pub ui_tails: Vec<f64>,
}

impl ReportJson {
    pub fn from_report(r: &ConvergenceReport, ui_cutoffs: &[f64], ui_tails: &[f64]) -> Self {
        ReportJson {
            levels: r.levels.clone(),
            metric_name: r.metric_name.clone(),
            values: r.values.clone(),
            cm_gaps: r.cm_gaps.clone(),
            degenerate: r.degenerate.clone(),
            dictionary_seed: r.dictionary_seed,
            notes: r.notes.clone(),
            ui_cutoffs: ui_cutoffs.to_vec(),
            ui_tails: ui_tails.to_vec(),
        }
    }
}

/// Two-column plot data: `level value` per line.
pub fn plot_data(levels: &[usize], values: &[f64]) -> String {
    let mut out = String::new();
    for (l, v) in levels.iter().zip(values) {
        out.push_str(&format!("{l} {}\n", fmt_f64(*v)));
    }
    out
}

/// Uniform-integrability profile CSV: `cutoff,tail`.
pub fn ui_csv(c_grid: &[f64], tails: &[f64]) -> String {
    let mut out = String::from("cutoff,tail\n");
    for (c, t) in c_grid.iter().zip(tails) {
        out.push_str(&format!("{},{}\n", fmt_f64(*c), fmt_f64(*t)));
    }
    out
}

/// Continuity probe CSV: `direction,scale,modulus,degenerate`.
pub fn probe_csv(table: &ProbeTable) -> String {
    let mut out = String::from("direction,scale,modulus,degenerate\n");
    for (d, row) in table.moduli.iter().enumerate() {
        for (s, &m) in row.iter().enumerate() {
            out.push_str(&format!(
                "{d},{},{},{}\n",
                fmt_f64(table.scales[s]),
                fmt_f64(m),
                if table.degenerate[d][s] { 1 } else { 0 }
            ));
        }
    }
    out
}

/// Posterior summary, serialized as JSON with this exact field order.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub seed: u64,
    pub particles: usize,
    pub valid: bool,
    pub log_evidence: f64,
    pub ess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_std_error: Option<f64>,
    pub config_hash: String,
}

/// Run manifest: config hash, toolkit version, artifact checksums and
/// wall-clock timings. The timings make this the one artifact that is not
/// byte-reproducible; everything it points to is.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub toolkit_version: String,
    pub artifacts: Vec<Artifact>,
    pub timings_seconds: Vec<(String, f64)>,
}

pub fn config_hash(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))
}

pub fn out_dir(base: &str) -> PathBuf {
    PathBuf::from(base)
}
