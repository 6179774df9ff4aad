//! Conic feasibility programs characterizing the quantum graph
//! parameters, their doubly nonnegative relaxations with staircase
//! search over the color / stable-set count t, symmetry reduction,
//! witness construction and validation, and the aggregated chromatic
//! program with its dual.
//!
//! The program variable is indexed by {0} followed by V x [t] with
//! (u, i) at position 1 + u*t + i, matching the vertex ordering of the
//! orthogonality graph G_t.

mod aggregated;

pub use aggregated::{
    aggregated_chrom, aggregated_chrom_dual, ceil_guard, floor_guard, guard_snap, AggOutcome,
};

use crate::conic::{
    check_feasibility, BlockKind, ConicProblem, FeasVerdict, Sense, SparseBlockMat,
};
use crate::graphs::Graph;
use crate::linalg::{eig_sym, is_psd, SymMatrix, PSD_TOL};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QRelaxError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid coloring: {0}")]
    InvalidColoring(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("staircase undecided between t = {lo} and t = {hi}")]
    Undecided { lo: usize, hi: usize },
    #[error(transparent)]
    Conic(#[from] crate::conic::ConicError),
    #[error(transparent)]
    Graph(#[from] crate::graphs::GraphError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Stab,
    Chrom,
}

/// FULL keeps the within-group orthogonality conditions (O2 / O4);
/// RELAXED drops them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Full,
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QCone {
    Psd,
    Dnn,
}

/// Specification of one feasibility program instance.
#[derive(Debug, Clone)]
pub struct QProgramSpec {
    pub graph: Graph,
    pub t: usize,
    pub role: Role,
    pub variant: Variant,
    pub cone: QCone,
    pub reduced: bool,
}

impl QProgramSpec {
    pub fn new(graph: Graph, t: usize, role: Role, variant: Variant, cone: QCone) -> Self {
        QProgramSpec { graph, t, role, variant, cone, reduced: false }
    }

    pub fn dim(&self) -> usize {
        self.graph.n() * self.t + 1
    }

    /// index of the (u, i) variable in the bordered matrix
    pub fn idx(&self, u: usize, i: usize) -> usize {
        1 + u * self.t + i
    }
}

/// Named structural constraints of the full (unreduced) program.
pub fn structural_constraints(spec: &QProgramSpec) -> Vec<(String, SparseBlockMat, f64)> {
    let g = &spec.graph;
    let (n, t) = (g.n(), spec.t);
    let idx = |u: usize, i: usize| 1 + u * t + i;
    let mut out: Vec<(String, SparseBlockMat, f64)> = Vec::new();

    out.push(("C1".into(), SparseBlockMat::new().psd_entry(0, 0, 0, 1.0), 1.0));
    match spec.role {
        Role::Stab => {
            for i in 0..t {
                let mut m = SparseBlockMat::new();
                for u in 0..n {
                    m.push_psd(0, 0, idx(u, i), 0.5); // <E, X> doubles off-diagonals
                }
                out.push((format!("C2a[{i}]"), m, 1.0));
            }
            for i in 0..t {
                let mut m = SparseBlockMat::new();
                for u in 0..n {
                    for v in u..n {
                        m.push_psd(0, idx(u, i), idx(v, i), 1.0);
                    }
                }
                out.push((format!("C2b[{i}]"), m, 1.0));
            }
            // O1: X_{ui,vj} = 0 for i != j and u adjacent or equal to v
            for u in 0..n {
                for v in u..n {
                    if !g.adjacent_or_equal(u, v) {
                        continue;
                    }
                    for i in 0..t {
                        for j in 0..t {
                            if i == j || (u == v && j <= i) {
                                continue;
                            }
                            let (a, b) = (idx(u, i), idx(v, j));
                            out.push((
                                format!("O1[({u},{i}),({v},{j})]"),
                                SparseBlockMat::new().psd_entry(0, a, b, 1.0),
                                0.0,
                            ));
                        }
                    }
                }
            }
            if spec.variant == Variant::Full {
                // O2: X_{ui,vi} = 0 for u != v
                for i in 0..t {
                    for u in 0..n {
                        for v in (u + 1)..n {
                            out.push((
                                format!("O2[({u},{i}),({v},{i})]"),
                                SparseBlockMat::new().psd_entry(0, idx(u, i), idx(v, i), 1.0),
                                0.0,
                            ));
                        }
                    }
                }
            }
        }
        Role::Chrom => {
            for u in 0..n {
                let mut m = SparseBlockMat::new();
                for i in 0..t {
                    m.push_psd(0, 0, idx(u, i), 0.5);
                }
                out.push((format!("C3a[{u}]"), m, 1.0));
            }
            for u in 0..n {
                let mut m = SparseBlockMat::new();
                for i in 0..t {
                    for j in i..t {
                        m.push_psd(0, idx(u, i), idx(u, j), 1.0);
                    }
                }
                out.push((format!("C3b[{u}]"), m, 1.0));
            }
            // O3: X_{ui,vi} = 0 on edges
            for &(u, v) in g.edges() {
                for i in 0..t {
                    out.push((
                        format!("O3[({u},{i}),({v},{i})]"),
                        SparseBlockMat::new().psd_entry(0, idx(u, i), idx(v, i), 1.0),
                        0.0,
                    ));
                }
            }
            if spec.variant == Variant::Full {
                // O4: X_{ui,uj} = 0 for i != j
                for u in 0..n {
                    for i in 0..t {
                        for j in (i + 1)..t {
                            out.push((
                                format!("O4[({u},{i}),({u},{j})]"),
                                SparseBlockMat::new().psd_entry(0, idx(u, i), idx(u, j), 1.0),
                                0.0,
                            ));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Pairs (a < b) of the bordered matrix pinned to zero by the spec.
fn pinned_pairs(spec: &QProgramSpec) -> std::collections::BTreeSet<(usize, usize)> {
    let g = &spec.graph;
    let (n, t) = (g.n(), spec.t);
    let idx = |u: usize, i: usize| 1 + u * t + i;
    let mut pins = std::collections::BTreeSet::new();
    for u in 0..n {
        for i in 0..t {
            for v in 0..n {
                for j in 0..t {
                    let (a, b) = (idx(u, i), idx(v, j));
                    if a >= b {
                        continue;
                    }
                    let pinned = match spec.role {
                        Role::Stab => {
                            (i != j && g.adjacent_or_equal(u, v))
                                || (spec.variant == Variant::Full && i == j && u != v)
                        }
                        Role::Chrom => {
                            (i == j && g.has_edge(u, v))
                                || (spec.variant == Variant::Full && u == v && i != j)
                        }
                    };
                    if pinned {
                        pins.insert((a, b));
                    }
                }
            }
        }
    }
    pins
}

/// Build the feasibility program of the spec over the full
/// (nt+1)-dimensional matrix. DNN is realized as the PSD block plus
/// nonnegativity ties on every entry not pinned to zero.
pub fn build_program(spec: &QProgramSpec) -> ConicProblem {
    let dim = spec.dim();
    let pins = pinned_pairs(spec);
    let mut free_pairs: Vec<(usize, usize)> = Vec::new();
    if spec.cone == QCone::Dnn {
        for a in 0..dim {
            for b in (a + 1)..dim {
                if !pins.contains(&(a, b)) {
                    free_pairs.push((a, b));
                }
            }
        }
    }
    let mut cone = vec![BlockKind::Psd(dim)];
    if !free_pairs.is_empty() {
        cone.push(BlockKind::Nonneg(free_pairs.len()));
    }
    let mut p = ConicProblem::new(Sense::Max, cone);
    for (_, m, rhs) in structural_constraints(spec) {
        p.add_constraint(m, rhs);
    }
    for (k, &(a, b)) in free_pairs.iter().enumerate() {
        let m = SparseBlockMat::new().psd_entry(0, a, b, 0.5).lin_entry(1, k, -1.0);
        p.add_constraint(m, 0.0);
    }
    p
}

/// Max residual of the structural constraints against a dense matrix,
/// with the name of the worst constraint.
pub fn structural_residuals(spec: &QProgramSpec, y: &SymMatrix) -> (f64, String) {
    let mut worst = 0.0;
    let mut name = String::from("none");
    let wrapped = crate::conic::BlockMatrix { blocks: vec![crate::conic::BlockData::Psd(y.clone())] };
    for (label, m, rhs) in structural_constraints(spec) {
        let r = (m.inner(&wrapped) - rhs).abs();
        if r > worst {
            worst = r;
            name = label;
        }
    }
    (worst, name)
}

/// Feasibility of one staircase step.
pub fn feasible_at(spec: &QProgramSpec, tol: f64) -> Result<Option<bool>, QRelaxError> {
    let p = if spec.reduced && spec.t >= 2 { reduced_program(spec)? } else { build_program(spec) };
    match check_feasibility(&p, tol)? {
        FeasVerdict::Feasible(_) => Ok(Some(true)),
        FeasVerdict::Infeasible { .. } => Ok(Some(false)),
        FeasVerdict::Undecided(_) => Ok(None),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StairOpts {
    /// verify the whole range instead of binary search
    pub sweep: bool,
    /// use the symmetry-reduced programs (t >= 2)
    pub reduced: bool,
    pub tol: f64,
}

impl Default for StairOpts {
    fn default() -> Self {
        StairOpts { sweep: false, reduced: false, tol: 1e-7 }
    }
}

fn stair_spec(g: &Graph, t: usize, role: Role, variant: Variant, cone: QCone, reduced: bool) -> QProgramSpec {
    QProgramSpec { graph: g.clone(), t, role, variant, cone, reduced }
}

/// Largest t in [1, n] with the STAB program feasible. Monotone in t
/// (a feasible solution restricts to any smaller t), so binary search
/// applies; a sweep is available for strict verification.
pub fn max_stab_t(g: &Graph, cone: QCone, variant: Variant) -> Result<usize, QRelaxError> {
    max_stab_t_with(g, cone, variant, &StairOpts::default())
}

pub fn max_stab_t_with(
    g: &Graph,
    cone: QCone,
    variant: Variant,
    opts: &StairOpts,
) -> Result<usize, QRelaxError> {
    let n = g.n();
    if n == 0 {
        return Err(QRelaxError::InvalidParameter("graph must have at least one vertex".into()));
    }
    let feas = |t: usize| feasible_at(&stair_spec(g, t, Role::Stab, variant, cone, opts.reduced), opts.tol);
    if opts.sweep {
        let mut best = 0usize;
        for t in 1..=n {
            match feas(t)? {
                Some(true) => best = t,
                Some(false) => break,
                None => return Err(QRelaxError::Undecided { lo: best, hi: t }),
            }
        }
        return Ok(best);
    }
    let (mut lo, mut hi) = (1usize, n);
    match feas(1)? {
        Some(true) => {}
        Some(false) => return Ok(0),
        None => return Err(QRelaxError::Undecided { lo: 0, hi: 1 }),
    }
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        match feas(mid)? {
            Some(true) => lo = mid,
            Some(false) => hi = mid - 1,
            None => return Err(QRelaxError::Undecided { lo, hi: mid }),
        }
    }
    Ok(lo)
}

/// Smallest t in [1, n] with the CHROM program feasible (n colors are
/// always enough). Monotone upward: padding with an unused color keeps
/// feasibility.
pub fn min_chrom_t(g: &Graph, cone: QCone, variant: Variant) -> Result<usize, QRelaxError> {
    min_chrom_t_with(g, cone, variant, &StairOpts::default())
}

pub fn min_chrom_t_with(
    g: &Graph,
    cone: QCone,
    variant: Variant,
    opts: &StairOpts,
) -> Result<usize, QRelaxError> {
    let n = g.n();
    if n == 0 {
        return Err(QRelaxError::InvalidParameter("graph must have at least one vertex".into()));
    }
    let feas = |t: usize| feasible_at(&stair_spec(g, t, Role::Chrom, variant, cone, opts.reduced), opts.tol);
    if opts.sweep {
        for t in 1..=n {
            match feas(t)? {
                Some(true) => return Ok(t),
                Some(false) => continue,
                None => return Err(QRelaxError::Undecided { lo: t.saturating_sub(1), hi: t }),
            }
        }
        return Ok(n);
    }
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feas(mid)? {
            Some(true) => hi = mid,
            Some(false) => lo = mid + 1,
            None => return Err(QRelaxError::Undecided { lo: mid, hi }),
        }
    }
    Ok(lo)
}

// ── Symmetry reduction ──────────────────────────────────────────────

/// Sym(t)-invariant data of a bordered matrix: border alpha, repeated
/// border row a, diagonal block A and off-diagonal block B.
#[derive(Debug, Clone)]
pub struct BlockForm {
    pub alpha: f64,
    pub a: Vec<f64>,
    pub a_mat: SymMatrix,
    pub b_mat: SymMatrix,
    pub t: usize,
    /// true when t = 1 (B carries no information)
    pub degenerate: bool,
}

/// Average a bordered matrix over the Sym(t) action (closed form, not
/// a t! sum) and extract the block data. Idempotent; constraints of
/// every program spec are Sym(t)-invariant, so feasibility is
/// preserved.
pub fn symmetrize(y: &SymMatrix, t: usize) -> Result<BlockForm, QRelaxError> {
    let dim = y.dim();
    if t == 0 || (dim - 1) % t != 0 {
        return Err(QRelaxError::InvalidParameter(format!(
            "matrix dim {dim} is not of the form n*t + 1 for t = {t}"
        )));
    }
    let n = (dim - 1) / t;
    let idx = |u: usize, i: usize| 1 + u * t + i;
    let alpha = y.get(0, 0);
    let mut a = vec![0.0; n];
    for u in 0..n {
        a[u] = (0..t).map(|i| y.get(0, idx(u, i))).sum::<f64>() / t as f64;
    }
    let a_mat = SymMatrix::from_fn(n, |u, v| {
        (0..t).map(|i| y.get(idx(u, i), idx(v, i))).sum::<f64>() / t as f64
    });
    let b_mat = if t >= 2 {
        SymMatrix::from_fn(n, |u, v| {
            let mut s = 0.0;
            for i in 0..t {
                for j in 0..t {
                    if i != j {
                        s += y.get(idx(u, i), idx(v, j));
                    }
                }
            }
            s / (t * (t - 1)) as f64
        })
    } else {
        SymMatrix::zeros(n)
    };
    Ok(BlockForm { alpha, a, a_mat, b_mat, t, degenerate: t == 1 })
}

impl BlockForm {
    /// Reassemble the full (nt+1)-dimensional invariant matrix.
    pub fn assemble(&self) -> SymMatrix {
        let n = self.a.len();
        let t = self.t;
        let _idx = |u: usize, i: usize| 1 + u * t + i;
        SymMatrix::from_fn(n * t + 1, |r, c| {
            if r == 0 && c == 0 {
                self.alpha
            } else if r == 0 {
                self.a[(c - 1) / t]
            } else if c == 0 {
                self.a[(r - 1) / t]
            } else {
                let (u, i) = ((r - 1) / t, (r - 1) % t);
                let (v, j) = ((c - 1) / t, (c - 1) % t);
                if i == j {
                    self.a_mat.get(u, v)
                } else {
                    self.b_mat.get(u, v)
                }
            }
        })
    }

    /// The two PSD conditions equivalent to the assembled matrix being
    /// PSD: A - B >= 0 and the bordered [[alpha, sqrt(t) a^T],
    /// [sqrt(t) a, A + (t-1)B]] >= 0.
    pub fn psd_conditions(&self) -> (SymMatrix, SymMatrix) {
        let n = self.a.len();
        let t = self.t as f64;
        let amb = self.a_mat.sub(&self.b_mat);
        let apb = self.a_mat.add(&self.b_mat.scale(t - 1.0));
        let bordered = SymMatrix::from_fn(n + 1, |r, c| {
            if r == 0 && c == 0 {
                self.alpha
            } else if r == 0 {
                t.sqrt() * self.a[c - 1]
            } else if c == 0 {
                t.sqrt() * self.a[r - 1]
            } else {
                apb.get(r - 1, c - 1)
            }
        });
        (amb, bordered)
    }
}

/// Block PSD test: the t-fold block matrix with diagonal
/// blocks A and off-diagonal blocks B is PSD iff A - B >= 0 and
/// A + (t-1)B >= 0.
pub fn block_psd_check(a: &SymMatrix, b: &SymMatrix, t: usize) -> Result<bool, QRelaxError> {
    if t < 2 {
        return Err(QRelaxError::InvalidParameter("block test needs t >= 2".into()));
    }
    if a.dim() != b.dim() {
        return Err(QRelaxError::InvalidParameter("A and B must share dimensions".into()));
    }
    let amb = a.sub(b);
    let apb = a.add(&b.scale((t - 1) as f64));
    Ok(is_psd(&amb, PSD_TOL)?.is_psd && is_psd(&apb, PSD_TOL)?.is_psd)
}

/// Symmetry-reduced feasibility program over (alpha, a, A, B), encoded
/// through the PSD blocks P = A - B and the bordered
/// Q = [[alpha, sqrt(t) a^T], [sqrt(t) a, A + (t-1)B]]; recovery:
/// A = (Q' + (t-1)P)/t, B = (Q' - P)/t with Q' the trailing block.
pub fn reduced_program(spec: &QProgramSpec) -> Result<ConicProblem, QRelaxError> {
    let t = spec.t;
    if t < 2 {
        return Err(QRelaxError::InvalidParameter("reduced program needs t >= 2".into()));
    }
    let g = &spec.graph;
    let n = g.n();
    let tf = t as f64;
    let sq = tf.sqrt();

    // entries a_u >= 0, A_uv >= 0, B_uv >= 0 where not pinned
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        BorderA(usize),
        MatA(usize, usize),
        MatB(usize, usize),
    }
    let mut pins: Vec<Kind> = Vec::new();
    let mut frees: Vec<Kind> = Vec::new();
    for u in 0..n {
        frees.push(Kind::BorderA(u));
    }
    for u in 0..n {
        for v in u..n {
            let (pin_a, pin_b) = match spec.role {
                Role::Stab => (
                    spec.variant == Variant::Full && u != v, // O2
                    g.adjacent_or_equal(u, v),               // O1
                ),
                Role::Chrom => (
                    g.has_edge(u, v),                        // O3
                    spec.variant == Variant::Full && u == v, // O4
                ),
            };
            if pin_a {
                pins.push(Kind::MatA(u, v));
            } else {
                frees.push(Kind::MatA(u, v));
            }
            if pin_b {
                pins.push(Kind::MatB(u, v));
            } else {
                frees.push(Kind::MatB(u, v));
            }
        }
    }

    // blocks: 0 = P (n), 1 = Q (n+1), 2 = nonneg ties (DNN only)
    let dnn = spec.cone == QCone::Dnn;
    let mut cone = vec![BlockKind::Psd(n), BlockKind::Psd(n + 1)];
    if dnn {
        cone.push(BlockKind::Nonneg(frees.len()));
    }
    let mut p = ConicProblem::new(Sense::Max, cone);

    // entry accessors as sparse rows: value(K) = linear form in P, Q
    let a_entry = |u: usize, v: usize| -> SparseBlockMat {
        // A_uv = (Q'_uv + (t-1) P_uv)/t; footnote: off-diagonal sparse
        // entries double under the inner product, so use half-weights.
        let w = if u == v { 1.0 } else { 0.5 };
        SparseBlockMat::new()
            .psd_entry(1, u + 1, v + 1, w / tf)
            .psd_entry(0, u, v, w * (tf - 1.0) / tf)
    };
    let b_entry = |u: usize, v: usize| -> SparseBlockMat {
        let w = if u == v { 1.0 } else { 0.5 };
        SparseBlockMat::new().psd_entry(1, u + 1, v + 1, w / tf).psd_entry(0, u, v, -w / tf)
    };
    let border_entry = |u: usize| -> SparseBlockMat {
        // a_u = Q_{0, u+1}/sqrt(t): off-diagonal, so half-weight
        SparseBlockMat::new().psd_entry(1, 0, u + 1, 0.5 / sq)
    };

    // C1: alpha = 1
    p.add_constraint(SparseBlockMat::new().psd_entry(1, 0, 0, 1.0), 1.0);
    match spec.role {
        Role::Stab => {
            // C2a: sum_u a_u = 1 (identical for each i after symmetrization)
            let mut m = SparseBlockMat::new();
            for u in 0..n {
                m.push_psd(1, 0, u + 1, 0.5 / sq);
            }
            p.add_constraint(m, 1.0);
            // C2b: sum over ordered (u, v) of A_uv = 1
            let mut m = SparseBlockMat::new();
            for u in 0..n {
                for v in u..n {
                    let scale = if u == v { 1.0 } else { 2.0 };
                    for &(blk, i, j, val) in &a_entry(u, v).psd {
                        m.push_psd(blk, i as usize, j as usize, val * scale);
                    }
                }
            }
            p.add_constraint(m, 1.0);
        }
        Role::Chrom => {
            // C3a: t * a_u = 1 for each u
            for u in 0..n {
                let mut m = SparseBlockMat::new();
                for &(blk, i, j, val) in &border_entry(u).psd {
                    m.push_psd(blk, i as usize, j as usize, val * tf);
                }
                p.add_constraint(m, 1.0);
            }
            // C3b: t A_uu + t(t-1) B_uu = 1, i.e. t * Q'_uu = 1
            for u in 0..n {
                p.add_constraint(SparseBlockMat::new().psd_entry(1, u + 1, u + 1, tf), 1.0);
            }
        }
    }
    for pin in &pins {
        let row = match *pin {
            Kind::MatA(u, v) => a_entry(u, v),
            Kind::MatB(u, v) => b_entry(u, v),
            Kind::BorderA(_) => unreachable!(),
        };
        p.add_constraint(row, 0.0);
    }
    if dnn {
        for (k, f) in frees.iter().enumerate() {
            let mut row = match *f {
                Kind::BorderA(u) => border_entry(u),
                Kind::MatA(u, v) => a_entry(u, v),
                Kind::MatB(u, v) => b_entry(u, v),
            };
            row.push_lin(2, k, -1.0);
            p.add_constraint(row, 0.0);
        }
    }
    Ok(p)
}

// ── Theta-prime lift ────────────────────────────────────────────────

/// Lift a feasible trace-one solution X of the theta-prime program on
/// G with value T = <J, X> >= t to a feasible solution of the
/// theta-prime program on the orthogonality graph G_t with value t:
/// M~ = [(T-1) D x I_t - (D - X) x (J_t - I_t)] / (t (T-1)),
/// D = Diag(X). The input trace is renormalized to exactly one first.
pub fn lift_theta_prime(g: &Graph, x: &SymMatrix, t: usize) -> Result<SymMatrix, QRelaxError> {
    let n = g.n();
    if x.dim() != n {
        return Err(QRelaxError::InvalidParameter("X dimension must match the graph".into()));
    }
    if t < 1 {
        return Err(QRelaxError::InvalidParameter("t must be >= 1".into()));
    }
    let x = x.scale(1.0 / x.trace());
    let big_t = x.entry_sum();
    if big_t <= 1.0 + 1e-12 {
        return Err(QRelaxError::InvalidParameter(format!(
            "degenerate input: <J, X> = {big_t} must exceed 1"
        )));
    }
    if (big_t - t as f64) < -1e-9 {
        return Err(QRelaxError::InvalidParameter(format!(
            "target t = {t} exceeds <J, X> = {big_t}"
        )));
    }
    let tf = t as f64;
    let idx = |u: usize, i: usize| u * t + i;
    let mut m = SymMatrix::zeros(n * t);
    for u in 0..n {
        for i in 0..t {
            m.set_sym(idx(u, i), idx(u, i), (big_t - 1.0) * x.get(u, u));
        }
    }
    for u in 0..n {
        for v in 0..n {
            for i in 0..t {
                for j in 0..t {
                    if i == j {
                        continue;
                    }
                    let (r, c) = (idx(u, i), idx(v, j));
                    if r < c {
                        let d_uv = if u == v { x.get(u, u) } else { 0.0 };
                        m.set_sym(r, c, -(d_uv - x.get(u, v)));
                    }
                }
            }
        }
    }
    Ok(m.scale(1.0 / (tf * (big_t - 1.0))))
}

// ── Diagonal repair ─────────────────────────────────────────────────

/// Move the within-group off-diagonal mass onto the diagonal so that a
/// RELAXED-feasible solution satisfies the FULL constraint set:
/// STAB adds Y'_{ui,vi} F^{uv}_i, CHROM adds Y'_{ui,uj} F^{ij}_u. The
/// per-group entry sums are preserved and PSD plus entrywise
/// nonnegativity survive when the input is DNN-feasible.
pub fn diag_repair(yp: &SymMatrix, t: usize, mode: Role, g: &Graph) -> Result<SymMatrix, QRelaxError> {
    let spec = QProgramSpec::new(g.clone(), t, mode, Variant::Relaxed, QCone::Dnn);
    if yp.dim() != spec.dim() {
        return Err(QRelaxError::InvalidParameter(format!(
            "matrix dim {} does not match n*t+1 = {}",
            yp.dim(),
            spec.dim()
        )));
    }
    let (resid, worst) = structural_residuals(&spec, yp);
    if resid > 1e-6 {
        return Err(QRelaxError::InvalidWitness(format!(
            "input violates the RELAXED constraints: {worst} residual {resid:.3e}"
        )));
    }
    let n = g.n();
    let idx = |u: usize, i: usize| 1 + u * t + i;
    let mut y = yp.clone();
    match mode {
        Role::Stab => {
            for i in 0..t {
                for u in 0..n {
                    for v in (u + 1)..n {
                        let w = y.get(idx(u, i), idx(v, i));
                        if w != 0.0 {
                            y.add_sym(idx(u, i), idx(u, i), w);
                            y.add_sym(idx(v, i), idx(v, i), w);
                            y.add_sym(idx(u, i), idx(v, i), -w);
                        }
                    }
                }
            }
        }
        Role::Chrom => {
            for u in 0..n {
                for i in 0..t {
                    for j in (i + 1)..t {
                        let w = y.get(idx(u, i), idx(u, j));
                        if w != 0.0 {
                            y.add_sym(idx(u, i), idx(u, i), w);
                            y.add_sym(idx(u, j), idx(u, j), w);
                            y.add_sym(idx(u, i), idx(u, j), -w);
                        }
                    }
                }
            }
        }
    }
    Ok(y)
}

// ── Witnesses ───────────────────────────────────────────────────────

/// PSD factor list (rho followed by the (u, i)-indexed family) whose
/// Gram matrix realizes a program solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QWitness {
    pub rho: SymMatrix,
    /// indexed by u*t + i
    pub parts: Vec<SymMatrix>,
    pub role: Role,
    pub t: usize,
}

impl QWitness {
    pub fn gram(&self) -> SymMatrix {
        let m = self.parts.len();
        SymMatrix::from_fn(m + 1, |r, c| {
            let f = |k: usize| if k == 0 { &self.rho } else { &self.parts[k - 1] };
            f(r).inner(f(c))
        })
    }
}

/// Classical coloring witness: scalar factors rho = 1,
/// rho_u^i = [coloring(u) = i]. Satisfies the FULL CHROM constraints
/// at the given t.
pub fn witness_from_coloring(g: &Graph, coloring: &[usize], t: usize) -> Result<QWitness, QRelaxError> {
    let n = g.n();
    if coloring.len() != n {
        return Err(QRelaxError::InvalidColoring(format!(
            "coloring has {} entries for {} vertices",
            coloring.len(),
            n
        )));
    }
    if let Some(&bad) = coloring.iter().find(|&&c| c >= t) {
        return Err(QRelaxError::InvalidColoring(format!("color {bad} out of range [0, {t})")));
    }
    for &(u, v) in g.edges() {
        if coloring[u] == coloring[v] {
            return Err(QRelaxError::InvalidColoring(format!(
                "edge ({u},{v}) has both endpoints colored {}",
                coloring[u]
            )));
        }
    }
    let one = SymMatrix::identity(1);
    let zero = SymMatrix::zeros(1);
    let mut parts = Vec::with_capacity(n * t);
    for u in 0..n {
        for i in 0..t {
            parts.push(if coloring[u] == i { one.clone() } else { zero.clone() });
        }
    }
    Ok(QWitness { rho: one, parts, role: Role::Chrom, t })
}

/// Stable-set witness: scalar factors rho = 1,
/// rho^u_i = [u in S_i]/|S_i| for pairwise-disjoint stable sets with a
/// stable union; t = number of sets. Singleton sets satisfy the FULL
/// constraint set, larger sets the RELAXED one.
pub fn witness_from_stable_sets(g: &Graph, sets: &[Vec<usize>]) -> Result<QWitness, QRelaxError> {
    let n = g.n();
    let t = sets.len();
    if t == 0 {
        return Err(QRelaxError::InvalidWitness("need at least one stable set".into()));
    }
    let mut seen = vec![false; n];
    for (k, s) in sets.iter().enumerate() {
        if s.is_empty() {
            return Err(QRelaxError::InvalidWitness(format!("set {k} is empty")));
        }
        for &v in s {
            if v >= n {
                return Err(QRelaxError::InvalidWitness(format!("vertex {v} out of range")));
            }
            if seen[v] {
                return Err(QRelaxError::InvalidWitness(format!("vertex {v} appears twice")));
            }
            seen[v] = true;
        }
    }
    let union: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
    for (a, &u) in union.iter().enumerate() {
        for &v in union.iter().skip(a + 1) {
            if g.has_edge(u, v) {
                return Err(QRelaxError::InvalidWitness(format!(
                    "union not stable: edge ({u},{v})"
                )));
            }
        }
    }
    let one = SymMatrix::identity(1);
    let mut parts = vec![SymMatrix::zeros(1); n * t];
    for (i, s) in sets.iter().enumerate() {
        let w = 1.0 / s.len() as f64;
        for &u in s {
            parts[u * t + i] = SymMatrix::identity(1).scale(w);
        }
    }
    Ok(QWitness { rho: one, parts, role: Role::Stab, t })
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub pass: bool,
    pub max_residual: f64,
    pub worst_constraint: String,
    pub cone_min: f64,
}

/// Check every constraint residual of the witness Gram against the
/// target spec; PASS iff all residuals are at most 1e-8 and the Gram
/// conforms to the cone.
pub fn validate_witness(w: &QWitness, spec: &QProgramSpec) -> Result<WitnessReport, QRelaxError> {
    let gram = w.gram();
    if gram.dim() != spec.dim() || w.t != spec.t {
        return Err(QRelaxError::InvalidWitness(format!(
            "witness shape (dim {}, t {}) does not match the spec (dim {}, t {})",
            gram.dim(),
            w.t,
            spec.dim(),
            spec.t
        )));
    }
    let (max_residual, worst_constraint) = structural_residuals(spec, &gram);
    let mut cone_min = eig_sym(&gram)?.lambda_min();
    if spec.cone == QCone::Dnn {
        let entry_min = gram.raw().iter().fold(f64::INFINITY, |m, &x| m.min(x));
        cone_min = cone_min.min(entry_min);
    }
    let pass = max_residual <= 1e-8 && cone_min >= -1e-8 * gram.max_abs().max(1.0);
    Ok(WitnessReport { pass, max_residual, worst_constraint, cone_min })
}

#[cfg(test)]
mod tests;
