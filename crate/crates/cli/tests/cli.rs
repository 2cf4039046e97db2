//! End-to-end tests of the `fsbayes` binary: subcommands, exit codes,
//! artifact contracts, and recipe-level oracles.

use std::path::Path;
use std::process::Command;

fn fsbayes() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fsbayes"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn csv_column(path: &Path, col: usize) -> Vec<f64> {
    read(path)
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn recipes_list_and_show() {
    let out = fsbayes().args(["recipes"]).output().unwrap();
    assert!(out.status.success());
    let names = String::from_utf8(out.stdout).unwrap();
    for expected in [
        "conjugate-gaussian",
        "torus-laplace",
        "spherical",
        "subordinated",
        "girsanov",
    ] {
        assert!(names.contains(expected), "missing {expected}");
    }
    let show = fsbayes()
        .args(["recipes", "show", "torus-laplace"])
        .output()
        .unwrap();
    assert!(show.status.success());
    assert!(String::from_utf8(show.stdout).unwrap().contains("laplace_fourier"));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nname = \"x\"\n").unwrap();
    let out = fsbayes()
        .args(["posterior", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let missing = fsbayes()
        .args(["posterior", "--config", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let unknown_recipe = fsbayes().args(["recipes", "run", "nope"]).output().unwrap();
    assert_eq!(unknown_recipe.status.code(), Some(2));
}

#[test]
fn degenerate_posterior_exits_with_code_3_and_writes_diagnostics() {
    // Box-restricted noise with an observation far outside any reachable
    // box: every particle is excluded, the evidence is degenerate.
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    std::fs::write(&obs, "index,value\n0,50.0\n1,50.0\n").unwrap();
    let cfg = format!(
        r#"
schema_version = 1
name = "degenerate"
seed = 3
particles = 200

[basis]
kind = "indexed"
dim = 2

[forward]
kind = "zero"

[noise]
kind = "dominated_box"
eigenvalues = {{ kind = "explicit", values = [1.0, 1.0] }}
box_coords = [0, 1]
box_bound = 1.0

[prior]
scheme = "kl"
level = 2
sigmas = {{ kind = "explicit", values = [1.0, 1.0] }}

[observation]
source = "file"
path = "{}"

[output]
directory = "{}"
"#,
        obs.display(),
        dir.path().join("out").display()
    );
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = fsbayes()
        .args(["posterior", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read(&dir.path().join("out/summary.json"));
    assert!(summary.contains("\"valid\": false"));
}

#[test]
fn conjugate_recipe_matches_analytic_posterior_mean() {
    // The bundled recipe's emitted conditional mean must sit near the
    // closed-form posterior mean computed from the emitted observation.
    let dir = tempfile::tempdir().unwrap();
    let status = fsbayes()
        .args([
            "recipes",
            "run",
            "conjugate-gaussian",
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let y = csv_column(&dir.path().join("o/observation.csv"), 1);
    let cm = csv_column(&dir.path().join("o/cm_estimate.csv"), 1);
    // Prior N(0, I), L = diag(1, 1/2), noise I:
    // C_post = diag(1/2, 4/5), m_post = (y0/2, 2 y1/5).
    let m_post = [0.5 * y[0], 0.4 * y[1]];
    // 3 MC standard errors at M = 1e5 are under 0.01 here; allow 0.02.
    assert!((cm[0] - m_post[0]).abs() < 0.02, "{} vs {}", cm[0], m_post[0]);
    assert!((cm[1] - m_post[1]).abs() < 0.02, "{} vs {}", cm[1], m_post[1]);
}

#[test]
fn torus_laplace_recipe_emits_a_consistent_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let status = fsbayes()
        .args([
            "recipes",
            "run",
            "torus-laplace",
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let bl: Vec<(usize, f64)> = read(&dir.path().join("o/ladder_bl.dat"))
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace();
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(bl.last().unwrap().1, 0.0, "reference distance to itself");
    assert!(bl.iter().all(|(_, v)| *v >= 0.0));
    assert!(
        bl.first().unwrap().1 > bl[bl.len() - 2].1,
        "coarsest level should be farthest from the reference: {bl:?}"
    );
    // The UI profile is emitted and nonincreasing.
    let tails = csv_column(&dir.path().join("o/ui.csv"), 1);
    assert!(tails.windows(2).all(|w| w[1] <= w[0]));
    // JSON mirror exists and parses.
    let json: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("o/ladder.json"))).unwrap();
    assert_eq!(json["metric_name"], "bl_to_reference");
}

#[test]
fn manifest_checksums_match_emitted_files() {
    use sha2::{Digest, Sha256};
    let dir = tempfile::tempdir().unwrap();
    let status = fsbayes()
        .args([
            "recipes",
            "run",
            "girsanov",
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("o/manifest.json"))).unwrap();
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for artifact in artifacts {
        let path = artifact["path"].as_str().unwrap();
        let contents = std::fs::read(path).unwrap();
        let mut hasher = Sha256::new();
        hasher.update(&contents);
        let digest = format!("{:x}", hasher.finalize());
        assert_eq!(digest, artifact["sha256"].as_str().unwrap(), "{path}");
        assert_eq!(contents.len() as u64, artifact["bytes"].as_u64().unwrap());
    }
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let status = fsbayes()
            .args([
                "recipes",
                "run",
                "subordinated",
                "--out",
                dir.path().join(sub).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["ensemble.csv", "observation.csv", "posterior.csv", "summary.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, seed) in [("a", "1"), ("b", "2")] {
        let status = fsbayes()
            .args([
                "recipes",
                "run",
                "conjugate-gaussian",
                "--seed",
                seed,
                "--out",
                dir.path().join(sub).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.path().join("a/posterior.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/posterior.csv")).unwrap();
    assert_ne!(a, b, "different seeds must produce different posteriors");
}

#[test]
fn nonfinite_observation_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    std::fs::write(&obs, "index,value\n0,NaN\n1,0.5\n").unwrap();
    let cfg = format!(
        r#"
schema_version = 1
name = "nan-obs"
seed = 3
particles = 50

[basis]
kind = "indexed"
dim = 2

[forward]
kind = "diagonal"
entries = [1.0, 1.0]

[noise]
kind = "gaussian"
eigenvalues = {{ kind = "explicit", values = [1.0, 1.0] }}

[prior]
scheme = "kl"
level = 2
sigmas = {{ kind = "explicit", values = [1.0, 1.0] }}

[observation]
source = "file"
path = "{}"

[output]
directory = "{}"
"#,
        obs.display(),
        dir.path().join("out").display()
    );
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = fsbayes()
        .args(["posterior", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn path_prior_bridges_to_spectral_noise() {
    // A deformed-Brownian prior feeding Laplace noise on trigonometric
    // coefficients: particles pass through the path-to-coefficient
    // bridge, and the posterior stage runs end to end.
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"
schema_version = 1
name = "bridged"
seed = 21
particles = 400

[basis]
kind = "fourier"
modes = 3

[forward]
kind = "diagonal"
entries = [1.0, 0.5, 0.5, 0.2, 0.2, 0.1, 0.1]

[noise]
kind = "laplace_fourier"
b = 0.4

[prior]
scheme = "gaussian_map"
level = 16
map = "clip"
master_cells = 64
horizon = 6.283185307179586

[observation]
source = "synthetic"
true_x = {{ kind = "sample" }}

[output]
directory = "{}"
"#,
        dir.path().join("out").display()
    );
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = fsbayes()
        .args(["posterior", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read(&dir.path().join("out/summary.json"));
    assert!(summary.contains("\"valid\": true"));
    // The unknown is a path, so the conditional mean is the weighted mean
    // path on the prior's grid.
    let cm = csv_column(&dir.path().join("out/cm_estimate.csv"), 1);
    assert_eq!(cm.len(), 65);
    assert!(cm.iter().all(|v| v.is_finite()));
}

#[test]
fn generate_and_probe_stages_work_standalone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"
schema_version = 1
name = "probe-demo"
seed = 11
particles = 500

[basis]
kind = "indexed"
dim = 3

[forward]
kind = "diagonal"
entries = [1.0, 0.6, 0.3]
saturate = 2.0

[noise]
kind = "gaussian"
eigenvalues = {{ kind = "decay", p = 1.0 }}

[prior]
scheme = "kl"
level = 3
sigmas = {{ kind = "decay", p = 1.0 }}

[observation]
source = "synthetic"
true_x = {{ kind = "sample" }}

[output]
directory = "{out}"

[probe]
scales = [0.0, 0.01, 0.1, 1.0]
directions = 2
"#,
        out = dir.path().join("out").display()
    );
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, cfg).unwrap();

    let gen = fsbayes()
        .args(["generate", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    assert!(dir.path().join("out/ensemble.csv").exists());
    assert!(dir.path().join("out/observation.csv").exists());

    let probe = fsbayes()
        .args(["probe", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(probe.status.success(), "{}", String::from_utf8_lossy(&probe.stderr));
    let rows = read(&dir.path().join("out/probe.csv"));
    // Zero scale rows must report a zero modulus.
    for line in rows.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[1].parse::<f64>().unwrap() == 0.0 {
            assert_eq!(fields[2].parse::<f64>().unwrap(), 0.0);
        }
    }
}
