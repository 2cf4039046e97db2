//! Coefficient-sequence representation of function spaces.
//!
//! Everything infinite-dimensional in the toolkit is truncated to a finite
//! orthonormal system: a function is a [`CoeffVector`] over a declared
//! [`Basis`], a forward operator is a diagonal or dense [`ForwardMap`]
//! between bases, and continuous-time objects live on explicit
//! [`PathGrid`]s. All types are immutable after construction and all
//! operations are pure.

use crate::error::{CoreError, Result};

/// A declared finite orthonormal system.
///
/// `embedding_weights` are the ambient-space norm weights of the basis
/// vectors (for the periodic Sobolev scale, `(1 + k^2)^{-1}`); they are
/// carried for diagnostics and ambient norms, not for the likelihood
/// formulas, which act coordinate-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub id: String,
    pub dim: usize,
    pub embedding_weights: Vec<f64>,
    pub index_labels: Vec<String>,
}

impl Basis {
    pub fn new(
        id: impl Into<String>,
        embedding_weights: Vec<f64>,
        index_labels: Vec<String>,
    ) -> Result<Self> {
        let id = id.into();
        let dim = embedding_weights.len();
        if dim == 0 {
            return Err(CoreError::Model("basis dimension must be >= 1".into()));
        }
        if embedding_weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(CoreError::Model(
                "embedding weights must be finite and positive".into(),
            ));
        }
        if index_labels.len() != dim {
            return Err(CoreError::Model("label count must equal dim".into()));
        }
        let mut sorted = index_labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != dim {
            return Err(CoreError::Model("index labels must be unique".into()));
        }
        Ok(Basis {
            id,
            dim,
            embedding_weights,
            index_labels,
        })
    }

    /// Plain indexed basis with unit embedding weights and labels `0..dim`.
    pub fn indexed(id: impl Into<String>, dim: usize) -> Result<Self> {
        Basis::new(
            id,
            vec![1.0; dim],
            (0..dim).map(|i| i.to_string()).collect(),
        )
    }

    /// Real trigonometric basis on the circle with `2K + 1` entries.
    ///
    /// Coordinate `0` is the constant mode; the pair labeled `+k` / `-k`
    /// spans the degree-`k` harmonics through the kernels
    /// `cas(kt) = cos(kt) + sin(kt)` and `cas(-kt) = cos(kt) - sin(kt)`.
    /// With this convention the pure cosine `cos(kt)` has coefficient `1/2`
    /// at both `+k` and `-k`, matching the symmetric complex-exponential
    /// magnitudes, while all stored coefficients stay real.
    /// Embedding weights are `(1 + k^2)^{-1}`.
    pub fn fourier(max_mode: usize) -> Self {
        let mut weights = Vec::with_capacity(2 * max_mode + 1);
        let mut labels = Vec::with_capacity(2 * max_mode + 1);
        weights.push(1.0);
        labels.push("0".to_string());
        for k in 1..=max_mode {
            let w = 1.0 / (1.0 + (k * k) as f64);
            weights.push(w);
            labels.push(format!("+{k}"));
            weights.push(w);
            labels.push(format!("-{k}"));
        }
        Basis::new(format!("fourier-{max_mode}"), weights, labels)
            .expect("fourier basis construction is always valid")
    }

    /// Signed Fourier mode of each coordinate of [`Basis::fourier`]:
    /// `[0, +1, -1, +2, -2, ...]`.
    pub fn fourier_modes(max_mode: usize) -> Vec<i64> {
        let mut modes = Vec::with_capacity(2 * max_mode + 1);
        modes.push(0i64);
        for k in 1..=max_mode as i64 {
            modes.push(k);
            modes.push(-k);
        }
        modes
    }
}

/// A function represented by finite coefficients in a declared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub basis_id: String,
    pub coeffs: Vec<f64>,
}

impl CoeffVector {
    pub fn new(basis_id: impl Into<String>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::Numeric {
                context: "coefficient vector",
                value: *coeffs.iter().find(|c| !c.is_finite()).unwrap(),
            });
        }
        Ok(CoeffVector {
            basis_id: basis_id.into(),
            coeffs,
        })
    }

    pub fn zeros(basis: &Basis) -> Self {
        CoeffVector {
            basis_id: basis.id.clone(),
            coeffs: vec![0.0; basis.dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }
}

fn check_same_len(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(CoreError::Model(format!(
            "{what}: length mismatch {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// A linear forward operator between coefficient spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardKind {
    /// Coordinate-wise multipliers `c_i`; requires equal domain and range
    /// dimension.
    Diagonal(Vec<f64>),
    /// Dense row-major matrix, `rows x cols = range_dim x domain_dim`.
    Dense { rows: usize, cols: usize, entries: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardMap {
    pub kind: ForwardKind,
    pub domain_basis: String,
    pub range_basis: String,
}

impl ForwardMap {
    pub fn diagonal(
        domain_basis: impl Into<String>,
        range_basis: impl Into<String>,
        entries: Vec<f64>,
    ) -> Result<Self> {
        if entries.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::Model("forward entries must be finite".into()));
        }
        Ok(ForwardMap {
            kind: ForwardKind::Diagonal(entries),
            domain_basis: domain_basis.into(),
            range_basis: range_basis.into(),
        })
    }

    pub fn dense(
        domain_basis: impl Into<String>,
        range_basis: impl Into<String>,
        rows: usize,
        cols: usize,
        entries: Vec<f64>,
    ) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(CoreError::Model(format!(
                "dense forward: {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::Model("forward entries must be finite".into()));
        }
        Ok(ForwardMap {
            kind: ForwardKind::Dense { rows, cols, entries },
            domain_basis: domain_basis.into(),
            range_basis: range_basis.into(),
        })
    }

    pub fn domain_dim(&self) -> usize {
        match &self.kind {
            ForwardKind::Diagonal(c) => c.len(),
            ForwardKind::Dense { cols, .. } => *cols,
        }
    }

    pub fn range_dim(&self) -> usize {
        match &self.kind {
            ForwardKind::Diagonal(c) => c.len(),
            ForwardKind::Dense { rows, .. } => *rows,
        }
    }

    /// Operator norm bound: exact `max |c_i|` for diagonal maps, Frobenius
    /// bound for dense ones.
    pub fn norm_bound(&self) -> f64 {
        match &self.kind {
            ForwardKind::Diagonal(c) => c.iter().fold(0.0, |m, x| m.max(x.abs())),
            ForwardKind::Dense { entries, .. } => {
                entries.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        }
    }
}

/// Applies the forward operator to a coefficient vector.
pub fn apply_forward(map: &ForwardMap, x: &CoeffVector) -> Result<CoeffVector> {
    if x.basis_id != map.domain_basis {
        return Err(CoreError::Basis {
            expected: map.domain_basis.clone(),
            got: x.basis_id.clone(),
        });
    }
    let coeffs = apply_forward_raw(map, &x.coeffs)?;
    Ok(CoeffVector {
        basis_id: map.range_basis.clone(),
        coeffs,
    })
}

/// Forward application on raw coordinates (no basis bookkeeping); used by
/// the particle loops where the basis check has been made once up front.
pub fn apply_forward_raw(map: &ForwardMap, x: &[f64]) -> Result<Vec<f64>> {
    match &map.kind {
        ForwardKind::Diagonal(c) => {
            check_same_len(c, x, "diagonal forward")?;
            Ok(c.iter().zip(x).map(|(ci, xi)| ci * xi).collect())
        }
        ForwardKind::Dense { rows, cols, entries } => {
            if x.len() != *cols {
                return Err(CoreError::Model(format!(
                    "dense forward: domain dim {cols}, input dim {}",
                    x.len()
                )));
            }
            let mut out = vec![0.0; *rows];
            for (r, o) in out.iter_mut().enumerate() {
                let row = &entries[r * cols..(r + 1) * cols];
                let mut acc = 0.0;
                for (a, b) in row.iter().zip(x) {
                    acc += a * b;
                }
                *o = acc;
            }
            Ok(out)
        }
    }
}

fn check_eigenvalues(eigenvalues: &[f64]) -> Result<()> {
    for &l in eigenvalues {
        if !(l.is_finite() && l > 0.0) {
            return Err(CoreError::Model(format!(
                "covariance eigenvalue must be positive and finite, got {l}"
            )));
        }
    }
    Ok(())
}

/// Squared Cameron-Martin norm `sum h_i^2 / lambda_i` of a translation in
/// the spectral coordinates of a Gaussian measure.
pub fn cm_norm_sq(h: &[f64], eigenvalues: &[f64]) -> Result<f64> {
    check_eigenvalues(eigenvalues)?;
    check_same_len(h, eigenvalues, "cm_norm_sq")?;
    let mut acc = 0.0;
    for (hi, li) in h.iter().zip(eigenvalues) {
        acc += hi * hi / li;
    }
    if !acc.is_finite() {
        return Err(CoreError::Numeric {
            context: "cm_norm_sq",
            value: acc,
        });
    }
    Ok(acc)
}

/// Inverse-covariance pairing `sum y_i h_i / lambda_i`, the spectral form
/// of the duality between an observation and an admissible translation.
/// Symmetric in `(y, h)` and equal to [`cm_norm_sq`] when `y = h`.
pub fn dual_pairing(y: &[f64], h: &[f64], eigenvalues: &[f64]) -> Result<f64> {
    check_eigenvalues(eigenvalues)?;
    check_same_len(y, h, "dual_pairing")?;
    check_same_len(y, eigenvalues, "dual_pairing")?;
    let mut acc = 0.0;
    for ((yi, hi), li) in y.iter().zip(h).zip(eigenvalues) {
        acc += yi * hi / li;
    }
    if !acc.is_finite() {
        return Err(CoreError::Numeric {
            context: "dual_pairing",
            value: acc,
        });
    }
    Ok(acc)
}

/// A sampled continuous-time path on an explicit, possibly nonuniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PathGrid {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(CoreError::Grid(format!(
                "times ({}) and values ({}) must have equal length",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(CoreError::Grid("a path needs at least 2 grid points".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::Grid("times must be strictly increasing".into()));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::Grid("times and values must be finite".into()));
        }
        Ok(PathGrid { times, values })
    }

    /// Uniform grid `t_j = j * horizon / cells` with all-zero values.
    pub fn zeros_uniform(cells: usize, horizon: f64) -> Result<Self> {
        let times = uniform_times(cells, horizon)?;
        let values = vec![0.0; times.len()];
        PathGrid::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Checks that this path and `other` share the identical time grid.
    pub fn check_aligned(&self, other: &PathGrid) -> Result<()> {
        if self.times != other.times {
            return Err(CoreError::Grid("paths live on different time grids".into()));
        }
        Ok(())
    }
}

/// Uniform time grid `0, h, ..., horizon` with `cells` cells.
pub fn uniform_times(cells: usize, horizon: f64) -> Result<Vec<f64>> {
    if cells == 0 || !(horizon.is_finite() && horizon > 0.0) {
        return Err(CoreError::Grid(
            "uniform grid needs cells >= 1 and a positive horizon".into(),
        ));
    }
    Ok((0..=cells)
        .map(|j| horizon * j as f64 / cells as f64)
        .collect())
}

/// Trapezoid value of `integrand` sampled on `times`.
pub fn trapezoid(times: &[f64], integrand: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 1..times.len() {
        acc += 0.5 * (times[j] - times[j - 1]) * (integrand[j] + integrand[j - 1]);
    }
    acc
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fourier coefficients of a periodic path on `[0, 2*pi]`, returned in the
/// real trigonometric basis of [`Basis::fourier`].
///
/// Coordinate for mode `k` is the trapezoid approximation of
/// `(2*pi)^{-1} * integral f(t) cas(k t) dt` with
/// `cas(kt) = cos(kt) + sin(kt)`, so a pure `cos(kt)` input yields `1/2`
/// at both `+k` and `-k` and a pure `sin(kt)` input yields `+1/2` / `-1/2`.
pub fn trig_coeffs(path: &PathGrid, max_mode: usize) -> Result<CoeffVector> {
    let t0 = path.times[0];
    let t1 = path.horizon();
    let tol = 1e-9;
    if t0.abs() > tol || (t1 - TWO_PI).abs() > tol {
        return Err(CoreError::Domain(format!(
            "trig_coeffs needs a path on [0, 2*pi], got [{t0}, {t1}]"
        )));
    }
    let modes = Basis::fourier_modes(max_mode);
    let mut coeffs = Vec::with_capacity(modes.len());
    for &k in &modes {
        let kf = k as f64;
        let integrand: Vec<f64> = path
            .times
            .iter()
            .zip(&path.values)
            .map(|(&t, &v)| {
                let (s, c) = (kf * t).sin_cos();
                v * (c + s)
            })
            .collect();
        coeffs.push(trapezoid(&path.times, &integrand) / TWO_PI);
    }
    CoeffVector::new(format!("fourier-{max_mode}"), coeffs)
}

/// Evaluates a coefficient vector in the [`Basis::fourier`] convention back
/// to path values on the given times (the inverse rendering of
/// [`trig_coeffs`] for band-limited functions).
pub fn trig_eval(coeffs: &[f64], max_mode: usize, times: &[f64]) -> Result<Vec<f64>> {
    let modes = Basis::fourier_modes(max_mode);
    if modes.len() != coeffs.len() {
        return Err(CoreError::Model(format!(
            "trig_eval: {} modes but {} coefficients",
            modes.len(),
            coeffs.len()
        )));
    }
    Ok(times
        .iter()
        .map(|&t| {
            let mut acc = 0.0;
            for (&k, &r) in modes.iter().zip(coeffs) {
                let (s, c) = (k as f64 * t).sin_cos();
                acc += r * (c + s);
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_circle_grid(points: usize) -> Vec<f64> {
        (0..=points).map(|j| TWO_PI * j as f64 / points as f64).collect()
    }

    #[test]
    fn diagonal_forward_direct() {
        let l = ForwardMap::diagonal("b", "b", vec![1.0, 2.0]).unwrap();
        let x = CoeffVector::new("b", vec![3.0, 4.0]).unwrap();
        let y = apply_forward(&l, &x).unwrap();
        assert_eq!(y.coeffs, vec![3.0, 8.0]);
    }

    #[test]
    fn forward_at_zero_is_zero() {
        let l = ForwardMap::dense("b", "b", 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = CoeffVector::new("b", vec![0.0, 0.0]).unwrap();
        assert_eq!(apply_forward(&l, &x).unwrap().coeffs, vec![0.0, 0.0]);
    }

    #[test]
    fn dense_identity_is_identity() {
        let l = ForwardMap::dense("b", "b", 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let x = CoeffVector::new("b", vec![-1.5, 2.75]).unwrap();
        assert_eq!(apply_forward(&l, &x).unwrap().coeffs, x.coeffs);
    }

    #[test]
    fn basis_mismatch_is_an_error() {
        let l = ForwardMap::diagonal("domain", "range", vec![1.0]).unwrap();
        let x = CoeffVector::new("other", vec![1.0]).unwrap();
        assert!(matches!(apply_forward(&l, &x), Err(CoreError::Basis { .. })));
    }

    #[test]
    fn cm_norm_examples() {
        assert_eq!(cm_norm_sq(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cm_norm_sq(&[0.0, 0.0], &[2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(cm_norm_sq(&[2.0, 3.0], &[4.0, 9.0]).unwrap(), 2.0);
        assert!(cm_norm_sq(&[1.0], &[0.0]).is_err());
        assert!(cm_norm_sq(&[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(dual_pairing(&[2.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(dual_pairing(&[5.0, -2.0], &[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        let h = [0.3, -1.2, 2.0];
        let lam = [0.5, 1.5, 2.5];
        assert_eq!(
            dual_pairing(&h, &h, &lam).unwrap(),
            cm_norm_sq(&h, &lam).unwrap()
        );
    }

    #[test]
    fn pairing_is_symmetric() {
        let y = [1.0, -2.0, 0.5];
        let h = [0.25, 3.0, -1.0];
        let lam = [1.0, 4.0, 0.25];
        assert_eq!(
            dual_pairing(&y, &h, &lam).unwrap(),
            dual_pairing(&h, &y, &lam).unwrap()
        );
    }

    #[test]
    fn trig_coeffs_constant_path() {
        let times = uniform_circle_grid(64);
        let values = vec![1.0; times.len()];
        let path = PathGrid::new(times, values).unwrap();
        let c = trig_coeffs(&path, 3).unwrap();
        assert!((c.coeffs[0] - 1.0).abs() < 1e-12);
        for v in &c.coeffs[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn trig_coeffs_cosine_matches_analytic_half() {
        // Analytic oracle: (2*pi)^{-1} int cos(t) cas(+-t) dt = 1/2 at both
        // modes, 0 elsewhere.
        let times = uniform_circle_grid(4096);
        let values: Vec<f64> = times.iter().map(|t| t.cos()).collect();
        let path = PathGrid::new(times, values).unwrap();
        let c = trig_coeffs(&path, 2).unwrap();
        let modes = Basis::fourier_modes(2);
        for (v, k) in c.coeffs.iter().zip(modes) {
            let expected = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!(
                (v - expected).abs() < 1e-6,
                "mode {k}: got {v}, expected {expected}"
            );
        }
    }

    #[test]
    fn trig_coeffs_zero_path() {
        let times = uniform_circle_grid(32);
        let path = PathGrid::new(times.clone(), vec![0.0; times.len()]).unwrap();
        let c = trig_coeffs(&path, 4).unwrap();
        assert!(c.coeffs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn trig_coeffs_rejects_wrong_domain() {
        let path = PathGrid::zeros_uniform(16, 1.0).unwrap();
        assert!(matches!(trig_coeffs(&path, 1), Err(CoreError::Domain(_))));
    }

    #[test]
    fn path_grid_validation() {
        assert!(PathGrid::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(PathGrid::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(PathGrid::new(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn small_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-10.0f64..10.0, n)
        }

        proptest! {
            #[test]
            fn forward_is_linear(
                x in small_vec(4),
                xp in small_vec(4),
                a in -3.0f64..3.0,
                b in -3.0f64..3.0,
                entries in small_vec(16),
            ) {
                let l = ForwardMap::dense("b", "b", 4, 4, entries).unwrap();
                let combo: Vec<f64> = x.iter().zip(&xp)
                    .map(|(u, v)| a * u + b * v).collect();
                let lhs = apply_forward_raw(&l, &combo).unwrap();
                let lx = apply_forward_raw(&l, &x).unwrap();
                let lxp = apply_forward_raw(&l, &xp).unwrap();
                for i in 0..4 {
                    let rhs = a * lx[i] + b * lxp[i];
                    let scale = 1.0f64.max(lhs[i].abs()).max(rhs.abs());
                    prop_assert!((lhs[i] - rhs).abs() <= 1e-12 * scale);
                }
            }

            #[test]
            fn pairing_with_self_equals_norm(h in small_vec(6)) {
                let lam: Vec<f64> = (0..6).map(|i| 0.5 + i as f64).collect();
                prop_assert_eq!(
                    dual_pairing(&h, &h, &lam).unwrap(),
                    cm_norm_sq(&h, &lam).unwrap()
                );
            }

            #[test]
            fn trig_polynomial_roundtrip(
                coeffs in proptest::collection::vec(-2.0f64..2.0, 7),
            ) {
                // Degree-3 trig polynomial sampled on >= 8K uniform points.
                let max_mode = 3;
                let points = 64;
                let times: Vec<f64> =
                    (0..=points).map(|j| TWO_PI * j as f64 / points as f64).collect();
                let values = trig_eval(&coeffs, max_mode, &times).unwrap();
                let path = PathGrid::new(times, values).unwrap();
                let rec = trig_coeffs(&path, max_mode).unwrap();
                for (r, c) in rec.coeffs.iter().zip(&coeffs) {
                    prop_assert!((r - c).abs() < 1e-8, "got {r}, want {c}");
                }
            }
        }
    }
}
