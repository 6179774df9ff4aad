//! Theta numbers and their cone generalizations over the PSD and
//! doubly nonnegative cones.
//!
//! `vartheta_k` is the maximization form (trace-one, edge zeros), and
//! `theta_k` the minimization form (uniform diagonal t, Z - J PSD,
//! edge zeros). Over PSD they give the theta number of the graph and
//! of its complement respectively; over DNN they tighten to the
//! variants with entrywise sign conditions.

use crate::conic::{
    certify, BlockKind, ConicProblem, ResidualReport, Sense, SolveStatus, SolverOptions,
    SparseBlockMat,
};
use crate::graphs::{complement, Graph};
use crate::linalg::SymMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThetaError {
    #[error(transparent)]
    Conic(#[from] crate::conic::ConicError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Cone choice for the generalized theta programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaCone {
    Psd,
    Dnn,
}

/// Result of a theta-type solve.
#[derive(Debug, Clone)]
pub struct ThetaResult {
    pub value: f64,
    /// optimal matrix variable of the program (X for the max form, Z
    /// for the min form)
    pub witness: SymMatrix,
    /// dual objective value (equals t for the max form's dual)
    pub dual_value: f64,
    /// dual slack on the matrix block
    pub dual_witness: SymMatrix,
    pub status: SolveStatus,
    pub report: ResidualReport,
}

fn non_edges(g: &Graph) -> Vec<(usize, usize)> {
    let n = g.n();
    (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !g.has_edge(u, v))
        .collect()
}

/// Build the maximization program: max <J, X> s.t. Tr X = 1,
/// X_uv = 0 on edges, X in cone.
pub fn vartheta_problem(g: &Graph, cone: ThetaCone) -> ConicProblem {
    let n = g.n();
    let nonedges = non_edges(g);
    let mut blocks = vec![BlockKind::Psd(n)];
    if cone == ThetaCone::Dnn && !nonedges.is_empty() {
        blocks.push(BlockKind::Nonneg(nonedges.len()));
    }
    let mut p = ConicProblem::new(Sense::Max, blocks);
    for i in 0..n {
        for j in i..n {
            p.objective.push_psd(0, i, j, 1.0);
        }
    }
    let mut tr = SparseBlockMat::new();
    for i in 0..n {
        tr.push_psd(0, i, i, 1.0);
    }
    p.add_constraint(tr, 1.0);
    for &(u, v) in g.edges() {
        p.add_constraint(SparseBlockMat::new().psd_entry(0, u, v, 1.0), 0.0);
    }
    if cone == ThetaCone::Dnn {
        for (k, &(u, v)) in nonedges.iter().enumerate() {
            // X_uv = slack_k >= 0
            let m = SparseBlockMat::new().psd_entry(0, u, v, 0.5).lin_entry(1, k, -1.0);
            p.add_constraint(m, 0.0);
        }
    }
    p
}

/// Build the minimization program: min t s.t. Z in cone, Z - J PSD,
/// Z_uu = t, Z_uv = 0 on edges.
pub fn theta_problem(g: &Graph, cone: ThetaCone) -> ConicProblem {
    let n = g.n();
    let nonedges = non_edges(g);
    // blocks: 0 = Z, 1 = Y := Z - J, 2 = nonneg [t, slacks...]
    let slack_count = if cone == ThetaCone::Dnn { nonedges.len() } else { 0 };
    let blocks = vec![BlockKind::Psd(n), BlockKind::Psd(n), BlockKind::Nonneg(1 + slack_count)];
    let mut p = ConicProblem::new(Sense::Min, blocks);
    p.objective.push_lin(2, 0, 1.0);
    // Z_uu = t
    for u in 0..n {
        let m = SparseBlockMat::new().psd_entry(0, u, u, 1.0).lin_entry(2, 0, -1.0);
        p.add_constraint(m, 0.0);
    }
    // Z_uv = 0 on edges
    for &(u, v) in g.edges() {
        p.add_constraint(SparseBlockMat::new().psd_entry(0, u, v, 1.0), 0.0);
    }
    // Z - Y = J entrywise
    for u in 0..n {
        for v in u..n {
            let coeff = if u == v { 1.0 } else { 0.5 };
            let m = SparseBlockMat::new().psd_entry(0, u, v, coeff).psd_entry(1, u, v, -coeff);
            p.add_constraint(m, 1.0);
        }
    }
    if cone == ThetaCone::Dnn {
        for (k, &(u, v)) in nonedges.iter().enumerate() {
            let m = SparseBlockMat::new().psd_entry(0, u, v, 0.5).lin_entry(2, 1 + k, -1.0);
            p.add_constraint(m, 0.0);
        }
    }
    p
}

fn run(p: &ConicProblem, witness_block: usize) -> Result<ThetaResult, ThetaError> {
    let opts = SolverOptions::default();
    let out = p.solve_with(&opts)?;
    let report = certify(&out, p);
    Ok(ThetaResult {
        value: out.primal_value,
        witness: out.primal.psd(witness_block).clone(),
        dual_value: out.dual_value,
        dual_witness: out.dual_z.psd(witness_block).clone(),
        status: out.status,
        report,
    })
}

/// vartheta^K(G): theta number of G for PSD, its Schrijver
/// strengthening for DNN.
pub fn vartheta_k(g: &Graph, cone: ThetaCone) -> Result<ThetaResult, ThetaError> {
    if g.n() == 0 {
        return Err(ThetaError::InvalidParameter("graph must have at least one vertex".into()));
    }
    run(&vartheta_problem(g, cone), 0)
}

/// Theta^K(G): theta number of the complement for PSD, the Szegedy
/// variant of the complement for DNN.
pub fn theta_k(g: &Graph, cone: ThetaCone) -> Result<ThetaResult, ThetaError> {
    if g.n() == 0 {
        return Err(ThetaError::InvalidParameter("graph must have at least one vertex".into()));
    }
    run(&theta_problem(g, cone), 0)
}

/// Named theta variants of a graph G.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaVariant {
    /// Lovasz theta of G
    Theta,
    /// Schrijver theta' of G
    Prime,
    /// Szegedy theta+ of G
    Plus,
}

/// Compute a named variant for G itself.
pub fn theta_of(g: &Graph, variant: ThetaVariant) -> Result<ThetaResult, ThetaError> {
    match variant {
        ThetaVariant::Theta => vartheta_k(g, ThetaCone::Psd),
        ThetaVariant::Prime => vartheta_k(g, ThetaCone::Dnn),
        // theta+(G) = Theta^DNN(complement(G))
        ThetaVariant::Plus => theta_k(&complement(g), ThetaCone::Dnn),
    }
}

/// Monotone rescaling of a feasible trace-one solution from objective
/// value T down to target value t in [1, T):
/// X' = (t-1)/(T-1) X + (T-t)/(n(T-1)) I.
/// Preserves the zero pattern, the unit trace and entrywise
/// nonnegativity.
pub fn rescale_to_value(x: &SymMatrix, big_t: f64, t: f64, n: usize) -> Result<SymMatrix, ThetaError> {
    if !(t >= 1.0 && t < big_t) {
        return Err(ThetaError::InvalidParameter(format!(
            "target t must satisfy 1 <= t < T (got t={t}, T={big_t})"
        )));
    }
    if x.dim() != n {
        return Err(ThetaError::InvalidParameter(format!(
            "dimension mismatch: X is {}x{}, n = {n}",
            x.dim(),
            x.dim()
        )));
    }
    let a = (t - 1.0) / (big_t - 1.0);
    let b = (big_t - t) / (n as f64 * (big_t - 1.0));
    Ok(x.scale(a).add(&SymMatrix::identity(n).scale(b)))
}
