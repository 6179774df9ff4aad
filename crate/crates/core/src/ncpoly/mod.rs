//! Non-commutative word algebra with cyclic/involution
//! canonicalization, the matrix polynomials p_M, degree-truncated
//! tracial quadratic module membership for the ball, and the derived
//! graph parameter hierarchy.
//!
//! Words are identified up to cyclic shifts and reversal: the trace is
//! invariant under cyclic permutation, and reversal evaluates to the
//! transpose on symmetric arguments. Commutators vanish implicitly
//! under this identification.

mod psi;

pub use psi::{psi_eps_k, PSI_BASIS_CAP};

use crate::cones::{Certificate, MembershipVerdict, VerdictKind};
use crate::conic::{check_feasibility, BlockKind, ConicProblem, FeasVerdict, Sense, SparseBlockMat};
use crate::linalg::{eig_sym, is_psd, SymMatrix};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("polynomial degree {deg} exceeds the level bound 2k = {max}")]
    DegreeTooHigh { deg: usize, max: usize },
    #[error("Gram basis would need {needed} words, cap is {cap}")]
    SizeCapExceeded { needed: usize, cap: usize },
    #[error(transparent)]
    Conic(#[from] crate::conic::ConicError),
    #[error(transparent)]
    Cones(#[from] crate::cones::ConesError),
    #[error(transparent)]
    QRelax(#[from] crate::qrelax::QRelaxError),
}

/// Word in non-commutative variables; the involution is reversal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NcWord(pub Vec<u16>);

impl NcWord {
    pub fn empty() -> Self {
        NcWord(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn reversed(&self) -> NcWord {
        NcWord(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &NcWord) -> NcWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        NcWord(v)
    }
}

/// Lexicographically smallest word among all cyclic shifts of w and of
/// its reversal; idempotent by construction.
pub fn canon_word(w: &NcWord) -> NcWord {
    let n = w.0.len();
    if n == 0 {
        return w.clone();
    }
    let mut best: Option<Vec<u16>> = None;
    let rev: Vec<u16> = w.0.iter().rev().copied().collect();
    for base in [&w.0, &rev] {
        for s in 0..n {
            let rot: Vec<u16> = base[s..].iter().chain(&base[..s]).copied().collect();
            if best.as_ref().map_or(true, |b| rot < *b) {
                best = Some(rot);
            }
        }
    }
    NcWord(best.unwrap())
}

/// Non-commutative polynomial as a map from cyclic-canonical words to
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcPoly {
    pub nvars: usize,
    terms: BTreeMap<NcWord, f64>,
}

impl NcPoly {
    pub fn zero(nvars: usize) -> Self {
        NcPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, word: &NcWord, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let key = canon_word(word);
        let e = self.terms.entry(key.clone()).or_insert(0.0);
        *e += coeff;
        if e.abs() < 1e-300 {
            self.terms.remove(&key);
        }
    }

    pub fn coeff(&self, word: &NcWord) -> f64 {
        self.terms.get(&canon_word(word)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NcWord, &f64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.degree()).max().unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> NcPoly {
        let mut out = NcPoly::zero(self.nvars);
        for (w, c) in &self.terms {
            out.add_term(w, c * s);
        }
        out
    }

    pub fn add(&self, other: &NcPoly) -> NcPoly {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w, *c);
        }
        out
    }

    /// Evaluate at a tuple of symmetric matrices (one per variable):
    /// sum of coeff * X_{w_1} ... X_{w_m}.
    pub fn eval(&self, xs: &[SymMatrix]) -> SymMatrix {
        assert_eq!(xs.len(), self.nvars);
        let d = if xs.is_empty() { 1 } else { xs[0].dim() };
        let mut acc = vec![0.0; d * d];
        for (w, &c) in &self.terms {
            // product of the word's letters
            let mut prod: Vec<f64> = {
                let mut id = vec![0.0; d * d];
                for i in 0..d {
                    id[i * d + i] = 1.0;
                }
                id
            };
            for &var in &w.0 {
                let x = &xs[var as usize];
                let mut next = vec![0.0; d * d];
                for i in 0..d {
                    for kk in 0..d {
                        let p = prod[i * d + kk];
                        if p == 0.0 {
                            continue;
                        }
                        for j in 0..d {
                            next[i * d + j] += p * x.get(kk, j);
                        }
                    }
                }
                prod = next;
            }
            for (a, p) in acc.iter_mut().zip(&prod) {
                *a += c * p;
            }
        }
        // the result need not be symmetric entry-by-entry; only its
        // trace is used by callers, so symmetrize for the return type
        SymMatrix::from_fn(d, |i, j| 0.5 * (acc[i * d + j] + acc[j * d + i]))
    }

    /// Trace of the evaluation (well defined on canonical classes).
    pub fn trace_eval(&self, xs: &[SymMatrix]) -> f64 {
        self.eval(xs).trace()
    }
}

/// p_M = sum_ij M_ij X_i^2 X_j^2.
pub fn build_pm(m: &SymMatrix) -> NcPoly {
    let n = m.dim();
    let mut p = NcPoly::zero(n);
    for i in 0..n {
        for j in 0..n {
            let c = m.get(i, j);
            if c != 0.0 {
                p.add_term(&NcWord(vec![i as u16, i as u16, j as u16, j as u16]), c);
            }
        }
    }
    p
}

/// All words of degree <= k over n variables, in length-then-lex order.
pub fn words_up_to(n: usize, k: usize) -> Vec<NcWord> {
    let mut out = vec![NcWord::empty()];
    let mut layer = vec![NcWord::empty()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(layer.len() * n);
        for w in &layer {
            for v in 0..n {
                let mut e = w.0.clone();
                e.push(v as u16);
                next.push(NcWord(e));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Shared class-table machinery for the level-k module SDP over n
/// variables (built once per (n, k)).
pub struct ClassTable {
    pub nvars: usize,
    pub level: usize,
    /// Gram basis for the Hermitian-square part: degree <= k
    pub basis0: Vec<NcWord>,
    /// Gram basis for the ball-generator part: degree <= k-1
    pub basis1: Vec<NcWord>,
    /// canonical class representatives indexing the constraints
    pub classes: Vec<NcWord>,
    class_index: BTreeMap<NcWord, usize>,
    /// class of w_a * rev(w_b) for the basis0 cells (a <= b)
    t0: Vec<(usize, usize, usize)>,
    /// class of w_a * rev(w_b) for the basis1 cells (a <= b)
    t1: Vec<(usize, usize, usize)>,
    /// class of w_a X_i^2 rev(w_b) for basis1 cells; (a, b, class) with
    /// multiplicity folded in per variable
    t1ball: Vec<(usize, usize, usize)>,
}

impl ClassTable {
    pub fn build(nvars: usize, level: usize) -> ClassTable {
        let basis0 = words_up_to(nvars, level);
        let basis1 = words_up_to(nvars, level - 1);
        let mut class_index: BTreeMap<NcWord, usize> = BTreeMap::new();
        let mut classes: Vec<NcWord> = Vec::new();
        let intern = |w: NcWord, classes: &mut Vec<NcWord>, idx: &mut BTreeMap<NcWord, usize>| {
            let c = canon_word(&w);
            if let Some(&i) = idx.get(&c) {
                i
            } else {
                let i = classes.len();
                idx.insert(c.clone(), i);
                classes.push(c);
                i
            }
        };
        let mut t0 = Vec::new();
        for a in 0..basis0.len() {
            for b in a..basis0.len() {
                let w = basis0[a].concat(&basis0[b].reversed());
                let c = intern(w, &mut classes, &mut class_index);
                t0.push((a, b, c));
            }
        }
        let mut t1 = Vec::new();
        let mut t1ball = Vec::new();
        for a in 0..basis1.len() {
            for b in a..basis1.len() {
                let w = basis1[a].concat(&basis1[b].reversed());
                let c = intern(w, &mut classes, &mut class_index);
                t1.push((a, b, c));
                for v in 0..nvars {
                    let mid = NcWord(vec![v as u16, v as u16]);
                    let w = basis1[a].concat(&mid).concat(&basis1[b].reversed());
                    let c = intern(w, &mut classes, &mut class_index);
                    t1ball.push((a, b, c));
                }
            }
        }
        ClassTable { nvars, level, basis0, basis1, classes, class_index, t0, t1, t1ball }
    }

    pub fn class_of(&self, w: &NcWord) -> Option<usize> {
        self.class_index.get(&canon_word(w)).copied()
    }

    /// Reconstruct the class-coefficient vector of
    /// sum f f* + sum g (1 - sum X_i^2) g* from the two Gram matrices.
    pub fn reconstruct(&self, g0: &SymMatrix, g1: &SymMatrix) -> Vec<f64> {
        let mut out = vec![0.0; self.classes.len()];
        for &(a, b, c) in &self.t0 {
            let mult = if a == b { 1.0 } else { 2.0 };
            out[c] += mult * g0.get(a, b);
        }
        for &(a, b, c) in &self.t1 {
            let mult = if a == b { 1.0 } else { 2.0 };
            out[c] += mult * g1.get(a, b);
        }
        for &(a, b, c) in &self.t1ball {
            let mult = if a == b { 1.0 } else { 2.0 };
            out[c] -= mult * g1.get(a, b);
        }
        out
    }

    /// Target class-coefficient vector of p + eps.
    pub fn target(&self, p: &NcPoly, eps: f64) -> Result<Vec<f64>, NcError> {
        let mut out = vec![0.0; self.classes.len()];
        for (w, &c) in p.terms() {
            match self.class_of(w) {
                Some(i) => out[i] += c,
                None => {
                    return Err(NcError::DegreeTooHigh { deg: w.degree(), max: 2 * self.level })
                }
            }
        }
        if eps != 0.0 {
            let i = self
                .class_of(&NcWord::empty())
                .expect("empty word is always interned");
            out[i] += eps;
        }
        Ok(out)
    }
}

/// Feasibility program for p + eps in the level-k tracial quadratic
/// module of the ball.
fn module_problem(table: &ClassTable, target: &[f64]) -> ConicProblem {
    let mut p = ConicProblem::new(
        Sense::Max,
        vec![BlockKind::Psd(table.basis0.len()), BlockKind::Psd(table.basis1.len())],
    );
    let mut rows: Vec<SparseBlockMat> = (0..table.classes.len()).map(|_| SparseBlockMat::new()).collect();
    for &(a, b, c) in &table.t0 {
        rows[c].push_psd(0, a, b, 1.0);
    }
    for &(a, b, c) in &table.t1 {
        rows[c].push_psd(1, a, b, 1.0);
    }
    for &(a, b, c) in &table.t1ball {
        rows[c].push_psd(1, a, b, -1.0);
    }
    for (c, row) in rows.into_iter().enumerate() {
        p.add_constraint(row, target[c]);
    }
    p
}

/// Decide membership of p + eps in the degree-2k truncation of the
/// tracial quadratic module of the ball. MEMBER carries the two Gram
/// matrices; NOT_MEMBER carries the separating linear functional on
/// classes (nonnegative on the module cone, negative on p + eps).
pub fn tracial_sos_membership(p: &NcPoly, eps: f64, k: usize) -> Result<MembershipVerdict, NcError> {
    if eps < 0.0 {
        return Err(NcError::InvalidParameter("eps must be nonnegative".into()));
    }
    if k < 2 {
        return Err(NcError::InvalidParameter("level k must be at least 2".into()));
    }
    if p.degree() > 2 * k {
        return Err(NcError::DegreeTooHigh { deg: p.degree(), max: 2 * k });
    }
    let table = ClassTable::build(p.nvars, k);
    let target = table.target(p, eps)?;
    let problem = module_problem(&table, &target);
    // solved tighter than the default so the MEMBER reconstruction
    // meets the 1e-7 certificate tolerance
    match check_feasibility(&problem, 1e-8)? {
        FeasVerdict::Feasible(x) => Ok(MembershipVerdict {
            kind: VerdictKind::Member,
            certificate: Some(Certificate::TracialSos {
                g0: x.psd(0).clone(),
                g1: x.psd(1).clone(),
                eps,
                level: k,
            }),
            reason: "tracial-sos-grams".into(),
        }),
        FeasVerdict::Infeasible { ray_y, margin, .. } => Ok(MembershipVerdict {
            kind: VerdictKind::NotMember,
            certificate: Some(Certificate::TracialDual {
                values: ray_y,
                pairing: -margin,
                eps,
                level: k,
            }),
            reason: "tracial-dual-functional".into(),
        }),
        FeasVerdict::Undecided(_) => Ok(MembershipVerdict {
            kind: VerdictKind::Unknown,
            certificate: None,
            reason: "feasibility-undecided".into(),
        }),
    }
}

/// Membership of M in the level-k relaxation K_nc,eps: p_M + eps in
/// the truncated module. At (eps = 0, k = 2) this coincides with
/// membership in the DNN dual cone.
pub fn knc_membership(m: &SymMatrix, eps: f64, k: usize) -> Result<MembershipVerdict, NcError> {
    tracial_sos_membership(&build_pm(m), eps, k)
}

/// Re-validate a tracial certificate against the polynomial p_M of the
/// subject matrix (used by the shared verdict re-validation).
pub fn revalidate_tracial(subject: &SymMatrix, verdict: &MembershipVerdict) -> bool {
    let p = build_pm(subject);
    match (&verdict.kind, &verdict.certificate) {
        (VerdictKind::Member, Some(Certificate::TracialSos { g0, g1, eps, level })) => {
            revalidate_tracial_member(&p, g0, g1, *eps, *level)
        }
        (VerdictKind::NotMember, Some(Certificate::TracialDual { values, pairing, eps, level })) => {
            revalidate_tracial_refutation(&p, values, *pairing, *eps, *level)
        }
        (VerdictKind::Unknown, _) => true,
        _ => false,
    }
}

/// MEMBER check: both Grams PSD and the class-by-class reconstruction
/// matches p + eps within 1e-7 (relative to the target scale).
pub fn revalidate_tracial_member(p: &NcPoly, g0: &SymMatrix, g1: &SymMatrix, eps: f64, k: usize) -> bool {
    if k < 2 {
        return false;
    }
    let table = ClassTable::build(p.nvars, k);
    if g0.dim() != table.basis0.len() || g1.dim() != table.basis1.len() {
        return false;
    }
    if !matches!(is_psd(g0, 1e-7), Ok(c) if c.is_psd) {
        return false;
    }
    if !matches!(is_psd(g1, 1e-7), Ok(c) if c.is_psd) {
        return false;
    }
    let target = match table.target(p, eps) {
        Ok(t) => t,
        Err(_) => return false,
    };
    let recon = table.reconstruct(g0, g1);
    let scale = target.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    recon.iter().zip(&target).all(|(a, b)| (a - b).abs() <= 1e-7 * scale)
}

/// NOT_MEMBER check: the functional (one value per canonical class) is
/// nonnegative on the module cone - its moment matrix and ball
/// localizing matrix are PSD - and pairs negatively with p + eps.
pub fn revalidate_tracial_refutation(
    p: &NcPoly,
    values: &[f64],
    pairing: f64,
    eps: f64,
    k: usize,
) -> bool {
    if k < 2 {
        return false;
    }
    let table = ClassTable::build(p.nvars, k);
    if values.len() != table.classes.len() {
        return false;
    }
    let m0 = table.basis0.len();
    let m1 = table.basis1.len();
    let mut mom = SymMatrix::zeros(m0);
    for &(a, b, c) in &table.t0 {
        mom.set_sym(a, b, values[c]);
    }
    let mut loc = SymMatrix::zeros(m1);
    for &(a, b, c) in &table.t1 {
        loc.add_sym(a, b, values[c]);
    }
    for &(a, b, c) in &table.t1ball {
        loc.add_sym(a, b, -values[c]);
    }
    let scale = values.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mom_ok = matches!(eig_sym(&mom), Ok(s) if s.lambda_min() >= -1e-6 * scale);
    let loc_ok = matches!(eig_sym(&loc), Ok(s) if s.lambda_min() >= -1e-6 * scale);
    if !(mom_ok && loc_ok) {
        return false;
    }
    let target = match table.target(p, eps) {
        Ok(t) => t,
        Err(_) => return false,
    };
    let recomputed: f64 = target.iter().zip(values).map(|(t, y)| t * y).sum();
    recomputed < 0.0 && (recomputed - pairing).abs() <= 1e-6 * (1.0 + pairing.abs()) * scale
}

#[cfg(test)]
mod tests;
