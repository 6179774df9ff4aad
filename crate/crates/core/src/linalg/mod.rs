//! Dense symmetric-matrix kernel: spectra, PSD tests, Schur complements,
//! Gram constructions and matrix compositions.
//!
//! All types are immutable after construction and all operations are
//! pure, so values can be shared freely across threads.

mod eigen;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used by default PSD tests: a matrix passes when
/// its smallest eigenvalue is at least `-PSD_TOL * max(1, ||A||_2)`.
pub const PSD_TOL: f64 = 1e-8;

/// Relative threshold above which asymmetric input is rejected instead
/// of being symmetrized away.
pub const SYMMETRY_REJECT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix has non-finite entries")]
    InvalidMatrix,
    #[error("matrix is not symmetric within tolerance (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Schur pivot must be strictly positive, got {0}")]
    NonpositivePivot(f64),
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

// ── Vector ──────────────────────────────────────────────────────────

/// Dense real vector companion of [`SymMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    /// Standard unit vector e_i in dimension n.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Vector(v)
    }

    /// All-ones vector.
    pub fn ones(n: usize) -> Self {
        Vector(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * s).collect())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

// ── General dense matrix (internal workhorse, e.g. eigenvector bases) ──

/// Plain dense row-major matrix. Used where results are not symmetric,
/// e.g. eigenvector bases and Cholesky factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self.get(i, j) * v[j];
            }
            out[i] = s;
        }
        out
    }
}

// ── SymMatrix ───────────────────────────────────────────────────────

/// Dense real symmetric matrix, the universal numeric carrier.
///
/// Symmetry is enforced at construction by averaging `(A + A^T)/2`;
/// inputs whose asymmetry exceeds [`SYMMETRY_REJECT_TOL`] (relative) are
/// rejected rather than silently repaired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>, // row-major, full storage
}

#[derive(Serialize, Deserialize, Clone)]
struct SymMatrixRepr {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(m: SymMatrix) -> Self {
        let rows = (0..m.dim)
            .map(|i| m.data[i * m.dim..(i + 1) * m.dim].to_vec())
            .collect();
        SymMatrixRepr { dim: m.dim, rows }
    }
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = String;
    fn try_from(r: SymMatrixRepr) -> Result<Self, String> {
        let flat: Vec<f64> = r.rows.into_iter().flatten().collect();
        SymMatrix::new(r.dim, flat).map_err(|e| e.to_string())
    }
}

impl SymMatrix {
    /// Build from row-major entries, averaging away roundoff asymmetry.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::InvalidMatrix);
        }
        let maxabs = entries.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let scale = maxabs.max(1.0);
        let mut worst = 0.0_f64;
        let mut data = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = data[i * dim + j];
                let b = data[j * dim + i];
                worst = worst.max((a - b).abs());
                let avg = 0.5 * (a + b);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        if worst > SYMMETRY_REJECT_TOL * scale {
            return Err(LinalgError::NotSymmetric(worst / scale));
        }
        Ok(SymMatrix { dim, data })
    }

    /// Build from an entry function without a symmetry check; the
    /// function is evaluated only on `i <= j` and mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        SymMatrix { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// All-ones matrix J.
    pub fn ones(dim: usize) -> Self {
        SymMatrix { dim, data: vec![1.0; dim * dim] }
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Set the symmetric entry pair (i, j) and (j, i).
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Trace inner product <A, B>.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Sum of all entries, i.e. <J, A>.
    pub fn entry_sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len());
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let row = self.row(i);
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Quadratic form x^T A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Congruence self * A * self (symmetric for symmetric inputs;
    /// explicitly symmetrized against roundoff).
    pub fn congruence(&self, a: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, a.dim);
        let n = self.dim;
        // t = A * self
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = a.data[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    t[i * n + j] += aik * self.data[k * n + j];
                }
            }
        }
        // out = self * t, then symmetrize
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let sik = self.data[i * n + k];
                if sik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += sik * t[k * n + j];
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (out[i * n + j] + out[j * n + i]);
                out[i * n + j] = avg;
                out[j * n + i] = avg;
            }
        }
        SymMatrix { dim: n, data: out }
    }

    /// Congruence P^T * A * P for a general basis P (n x m), giving an
    /// m x m symmetric matrix.
    pub fn congruence_by(&self, p: &Mat) -> SymMatrix {
        assert_eq!(self.dim, p.rows);
        let n = self.dim;
        let m = p.cols;
        // t = A * P (n x m)
        let mut t = vec![0.0; n * m];
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..m {
                    t[i * m + j] += aik * p.data[k * m + j];
                }
            }
        }
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for k in 0..n {
                    s += p.data[k * m + i] * t[k * m + j];
                }
                out[i * m + j] = s;
                out[j * m + i] = s;
            }
        }
        SymMatrix { dim: m, data: out }
    }

    /// Principal submatrix on the given (ordered) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// Apply `f` to the spectrum: V f(Lambda) V^T.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix, LinalgError> {
        let spec = eig_sym(self)?;
        let n = self.dim;
        let mut out = SymMatrix::zeros(n);
        for k in 0..n {
            let fk = f(spec.eigenvalues[k]);
            if fk == 0.0 {
                continue;
            }
            let v = spec.eigenvectors.col(k);
            for i in 0..n {
                for j in i..n {
                    out.data[i * n + j] += fk * v[i] * v[j];
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                out.data[j * n + i] = out.data[i * n + j];
            }
        }
        Ok(out)
    }

    /// Cholesky factorization A = L L^T. Returns None when A is not
    /// (numerically) positive definite.
    pub fn cholesky(&self) -> Option<Mat> {
        let n = self.dim;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l.set(i, i, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Some(l)
    }

    /// Matrix text format: first line "n", then n rows of n reals.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.dim);
        for i in 0..self.dim {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{:.17e}", x)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parse the matrix text format; enforces the construction-time
    /// symmetry rule.
    pub fn from_text(text: &str) -> Result<SymMatrix, LinalgError> {
        let mut lines = text.lines().enumerate();
        let (first_no, first) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or(LinalgError::Parse { line: 1, msg: "empty input".into() })?;
        let dim: usize = first.trim().parse().map_err(|_| LinalgError::Parse {
            line: first_no + 1,
            msg: format!("expected dimension, got {:?}", first.trim()),
        })?;
        let mut vals = Vec::with_capacity(dim * dim);
        for (no, line) in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| LinalgError::Parse {
                    line: no + 1,
                    msg: format!("bad number {:?}", tok),
                })?;
                vals.push(v);
            }
        }
        if vals.len() != dim * dim {
            return Err(LinalgError::Parse {
                line: 1,
                msg: format!("expected {} entries, found {}", dim * dim, vals.len()),
            });
        }
        SymMatrix::new(dim, vals)
    }
}

// ── Spectrum & PSD test ─────────────────────────────────────────────

/// Full spectral decomposition with nondecreasing eigenvalues and
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat,
}

impl Spectrum {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Spectral norm of the decomposed matrix.
    pub fn norm2(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Result of a PSD test, carrying the extremal eigenpair as witness.
#[derive(Debug, Clone)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub lambda_min: f64,
    pub eigenvector: Vector,
}

/// Full spectral decomposition. Deterministic for fixed input.
pub fn eig_sym(a: &SymMatrix) -> Result<Spectrum, LinalgError> {
    let n = a.dim;
    let (vals, vecs) = eigen::symmetric_eigen(&a.data, n)?;
    Ok(Spectrum {
        eigenvalues: vals,
        eigenvectors: Mat { rows: n, cols: n, data: vecs },
    })
}

/// Test `lambda_min(A) >= -tol * max(1, ||A||_2)` and return the
/// extremal eigenpair.
pub fn is_psd(a: &SymMatrix, tol: f64) -> Result<PsdCheck, LinalgError> {
    assert!(tol >= 0.0, "tolerance must be nonnegative");
    let spec = eig_sym(a)?;
    let lambda_min = spec.lambda_min();
    let scale = spec.norm2().max(1.0);
    Ok(PsdCheck {
        is_psd: lambda_min >= -tol * scale,
        lambda_min,
        eigenvector: spec.eigenvectors.col(0),
    })
}

/// Schur complement of X with respect to the diagonal entry
/// `pivot_index`: A - b b^T / alpha on the complementary indices.
pub fn schur_complement(x: &SymMatrix, pivot_index: usize) -> Result<SymMatrix, LinalgError> {
    let n = x.dim;
    assert!(pivot_index < n, "pivot out of range");
    let alpha = x.get(pivot_index, pivot_index);
    if alpha <= 0.0 {
        return Err(LinalgError::NonpositivePivot(alpha));
    }
    let rest: Vec<usize> = (0..n).filter(|&i| i != pivot_index).collect();
    Ok(SymMatrix::from_fn(n - 1, |i, j| {
        x.get(rest[i], rest[j]) - x.get(rest[i], pivot_index) * x.get(rest[j], pivot_index) / alpha
    }))
}

/// Gram matrix of vectors under the standard inner product.
pub fn gram_of_vectors(factors: &[Vector]) -> Result<SymMatrix, LinalgError> {
    let k = factors.len();
    if k > 0 {
        let d = factors[0].len();
        if factors.iter().any(|f| f.len() != d) {
            return Err(LinalgError::DimensionMismatch("Gram factors must share one dimension".into()));
        }
    }
    Ok(SymMatrix::from_fn(k, |i, j| factors[i].dot(&factors[j])))
}

/// Gram matrix of symmetric matrices under the trace inner product.
pub fn gram_of_matrices(factors: &[SymMatrix]) -> Result<SymMatrix, LinalgError> {
    let k = factors.len();
    if k > 0 {
        let d = factors[0].dim();
        if factors.iter().any(|f| f.dim() != d) {
            return Err(LinalgError::DimensionMismatch("Gram factors must share one dimension".into()));
        }
    }
    Ok(SymMatrix::from_fn(k, |i, j| factors[i].inner(&factors[j])))
}

/// Composition kinds for [`compose`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compose {
    Kron,
    Hadamard,
    DirectSum,
}

/// Kronecker / entrywise / block-diagonal composition. All three
/// preserve positive semidefiniteness.
pub fn compose(a: &SymMatrix, b: &SymMatrix, kind: Compose) -> Result<SymMatrix, LinalgError> {
    match kind {
        Compose::Kron => {
            let (p, q) = (a.dim, b.dim);
            Ok(SymMatrix::from_fn(p * q, |i, j| {
                a.get(i / q, j / q) * b.get(i % q, j % q)
            }))
        }
        Compose::Hadamard => {
            if a.dim != b.dim {
                return Err(LinalgError::DimensionMismatch(format!(
                    "Hadamard product requires equal dims, got {} and {}",
                    a.dim, b.dim
                )));
            }
            Ok(SymMatrix {
                dim: a.dim,
                data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
            })
        }
        Compose::DirectSum => {
            let n = a.dim + b.dim;
            Ok(SymMatrix::from_fn(n, |i, j| {
                if i < a.dim && j < a.dim {
                    a.get(i, j)
                } else if i >= a.dim && j >= a.dim {
                    b.get(i - a.dim, j - a.dim)
                } else {
                    0.0
                }
            }))
        }
    }
}
