//! Symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL iteration, with eigenvector accumulation.
//!
//! Deterministic by construction (no randomization); eigenvalues are
//! returned in nondecreasing order and each eigenvector is sign-fixed so
//! that its largest-magnitude component is positive.

use super::LinalgError;

/// Householder reduction of the symmetric matrix stored row-major in `a`
/// (n x n) to tridiagonal form. On return `a` holds the accumulated
/// orthogonal matrix Q (columns), `d` the diagonal and `e` the
/// subdiagonal (e[0] is unused).
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    e[j] -= hh * f;
                    let g = e[j];
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

fn hypot2(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// QL iteration with implicit shifts on the tridiagonal (d, e), rotating
/// the columns of `z` along. `e[0]` is unused on entry.
fn ql_implicit(d: &mut [f64], e: &mut [f64], n: usize, z: &mut [f64]) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(LinalgError::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot2(g, 1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = hypot2(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + (i + 1)];
                    z[k * n + (i + 1)] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full symmetric eigendecomposition of the row-major n x n matrix `a`.
/// Returns nondecreasing eigenvalues and the matching orthonormal
/// eigenvector columns (row-major n x n).
pub(crate) fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut work = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return Ok((vec![a[0]], vec![1.0]));
    }
    tridiagonalize(&mut work, n, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, n, &mut work)?;

    // Sort ascending; stable order on ties keeps the result deterministic.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));
    let evals: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let mut evecs = vec![0.0; n * n];
    for (new_col, &old_col) in idx.iter().enumerate() {
        // Sign convention: largest-magnitude component positive.
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for r in 0..n {
            let v = work[r * n + old_col].abs();
            if v > best_abs + 1e-30 {
                best_abs = v;
                best = r;
            }
        }
        let flip = if work[best * n + old_col] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            evecs[r * n + new_col] = flip * work[r * n + old_col];
        }
    }
    Ok((evals, evecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_2x2_known() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = [2.0, 1.0, 1.0, 2.0];
        let (vals, vecs) = symmetric_eigen(&a, 2).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // columns orthonormal
        let dot = vecs[0] * vecs[1] + vecs[2] * vecs[3];
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn eigen_handles_zero_matrix() {
        let a = [0.0; 16];
        let (vals, _) = symmetric_eigen(&a, 4).unwrap();
        assert!(vals.iter().all(|v| v.abs() < 1e-14));
    }
}
