//! The graph parameter obtained from the aggregated chromatic dual by
//! replacing the DNN dual cone with the level-k relaxation of the
//! tracial quadratic module: maximize lambda over multipliers
//! (lambda, mu, y, z) such that p_{M(lambda, mu, y, z)} + eps admits a
//! degree-2k module decomposition, where
//! M = C - lambda B - mu A - sum y E~ - sum z E~ ranges over the
//! aggregated block structure.

use super::{build_pm, ClassTable, NcError};
use crate::conic::{BlockKind, ConicProblem, Sense, SolveStatus, SparseBlockMat};
use crate::graphs::Graph;
use crate::linalg::SymMatrix;

/// Hard cap on the Hermitian-square Gram basis size.
pub const PSI_BASIS_CAP: usize = 5000;

/// Tiny penalty on the +- splitting of the free multipliers; keeps the
/// split bounded without perturbing the optimum beyond 1e-9 scale.
const SPLIT_PENALTY: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PsiOutcome {
    pub value: f64,
    pub status: SolveStatus,
    /// total variable count N = sum (n t + 1) and the Gram basis size
    pub nvars: usize,
    pub basis: usize,
}

/// class-coefficient vector of p_M for a fixed symmetric matrix M
fn class_vec(table: &ClassTable, m: &SymMatrix) -> Vec<f64> {
    let p = build_pm(m);
    let mut out = vec![0.0; table.classes.len()];
    for (w, &c) in p.terms() {
        if let Some(i) = table.class_of(w) {
            out[i] += c;
        }
    }
    out
}

/// Level-k truncation of the hierarchy parameter for the graph, over a
/// contiguous t range.
pub fn psi_eps_k(g: &Graph, eps: f64, k: usize, t_range: &[usize]) -> Result<PsiOutcome, NcError> {
    if eps < 0.0 {
        return Err(NcError::InvalidParameter("eps must be nonnegative".into()));
    }
    if k < 2 {
        return Err(NcError::InvalidParameter("level k must be at least 2".into()));
    }
    if t_range.is_empty() {
        return Err(NcError::InvalidParameter("empty t range".into()));
    }
    for w in t_range.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(NcError::InvalidParameter("t range must be contiguous".into()));
        }
    }
    let n = g.n();
    if t_range[0] < 1 || *t_range.last().unwrap() > n {
        return Err(NcError::InvalidParameter(format!("t range must lie within [1, {n}]")));
    }

    // global variable index: per t, a block of n*t + 1 variables
    let mut offsets = Vec::with_capacity(t_range.len());
    let mut total = 0usize;
    for &t in t_range {
        offsets.push(total);
        total += n * t + 1;
    }
    let nvars = total;
    let basis: usize = (0..=k).map(|d| nvars.pow(d as u32)).sum();
    if basis > PSI_BASIS_CAP {
        return Err(NcError::SizeCapExceeded { needed: basis, cap: PSI_BASIS_CAP });
    }

    let table = ClassTable::build(nvars, k);

    // fixed matrices of the affine map, assembled globally
    let mut b_mat = SymMatrix::zeros(nvars);
    let mut c_mat = SymMatrix::zeros(nvars);
    let mut a_mat = SymMatrix::zeros(nvars);
    for (blk, &t) in t_range.iter().enumerate() {
        let off = offsets[blk];
        let idx = |u: usize, i: usize| off + 1 + u * t + i;
        b_mat.add_sym(off, off, 1.0);
        c_mat.add_sym(off, off, t as f64);
        a_mat.add_sym(off, off, n as f64);
        for u in 0..n {
            for i in 0..t {
                a_mat.add_sym(off, idx(u, i), -1.0);
                for j in i..t {
                    a_mat.add_sym(idx(u, i), idx(u, j), 1.0);
                }
            }
        }
    }
    let b_vec = class_vec(&table, &b_mat);
    let a_vec = class_vec(&table, &a_mat);
    let c_vec = class_vec(&table, &c_mat);

    // free multipliers: lambda, mu, then y per (t, edge, color), then z
    // per (t, vertex, color pair); coefficient vectors on classes
    let mut free_vecs: Vec<Vec<(usize, f64)>> = Vec::new();
    let sparsify = |v: &[f64]| -> Vec<(usize, f64)> {
        v.iter().enumerate().filter(|(_, x)| x.abs() > 0.0).map(|(i, &x)| (i, x)).collect()
    };
    free_vecs.push(sparsify(&b_vec)); // lambda
    free_vecs.push(sparsify(&a_vec)); // mu
    for (blk, &t) in t_range.iter().enumerate() {
        let off = offsets[blk];
        let idx = |u: usize, i: usize| off + 1 + u * t + i;
        for &(u, v) in g.edges() {
            for i in 0..t {
                let mut e = SymMatrix::zeros(nvars);
                e.add_sym(idx(u, i), idx(v, i), 1.0);
                free_vecs.push(sparsify(&class_vec(&table, &e)));
            }
        }
        for u in 0..n {
            for i in 0..t {
                for j in (i + 1)..t {
                    let mut e = SymMatrix::zeros(nvars);
                    e.add_sym(idx(u, i), idx(u, j), 1.0);
                    free_vecs.push(sparsify(&class_vec(&table, &e)));
                }
            }
        }
    }
    let nf = free_vecs.len();

    // blocks: G0, G1, then the +- split of the multipliers
    let mut p = ConicProblem::new(
        Sense::Max,
        vec![
            BlockKind::Psd(table.basis0.len()),
            BlockKind::Psd(table.basis1.len()),
            BlockKind::Nonneg(2 * nf),
        ],
    );
    // objective: lambda (var 0) with the split penalty
    p.objective.push_lin(2, 0, 1.0);
    p.objective.push_lin(2, nf, -1.0);
    for i in 0..2 * nf {
        p.objective.push_lin(2, i, -SPLIT_PENALTY);
    }

    // constraint per class: Gram terms + sum_f coef_f * f = c_vec + eps
    let mut rows: Vec<SparseBlockMat> =
        (0..table.classes.len()).map(|_| SparseBlockMat::new()).collect();
    for &(a, b, c) in &table.t0 {
        rows[c].push_psd(0, a, b, 1.0);
    }
    for &(a, b, c) in &table.t1 {
        rows[c].push_psd(1, a, b, 1.0);
    }
    for &(a, b, c) in &table.t1ball {
        rows[c].push_psd(1, a, b, -1.0);
    }
    for (f, vecs) in free_vecs.iter().enumerate() {
        for &(c, coef) in vecs {
            rows[c].push_lin(2, f, coef);
            rows[c].push_lin(2, nf + f, -coef);
        }
    }
    let empty_class = table.class_of(&super::NcWord::empty()).unwrap();
    for (c, row) in rows.into_iter().enumerate() {
        let rhs = c_vec[c] + if c == empty_class { eps } else { 0.0 };
        p.add_constraint(row, rhs);
    }

    let out = p.solve(1e-7, 300)?;
    Ok(PsiOutcome { value: out.primal_value, status: out.status, nvars, basis: table.basis0.len() })
}
