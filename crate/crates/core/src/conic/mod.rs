//! Linear conic programs over direct products of PSD blocks and
//! nonnegative-orthant blocks, solved by a self-contained primal-dual
//! interior-point method.
//!
//! A problem is the pair
//!
//! ```text
//! (P)  max/min <C, X>   s.t.  <A_j, X> = b_j  (j = 1..m),  X in K
//! (D)  min/max b^T y    s.t.  Z = sum_j y_j A_j - C in K
//! ```
//!
//! where `K` is the ordered product of the declared blocks (each block
//! either `PSD(n)` or `NONNEG(n)`; the product cone is self-dual).
//!
//! Sparse data convention: a PSD triplet `(i, j, v)` with `i <= j`
//! stands for the symmetric matrix with value `v` at both `(i, j)` and
//! `(j, i)`, so `<A, X> = sum_{i<j} 2 v X_ij + sum_{i==j} v X_ii`.

mod certify;
mod feas;
mod solver;

pub use certify::{certify, ResidualReport};
pub use feas::check_feasibility;

use crate::linalg::SymMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// JSON schema tag for serialized problems and outcomes.
pub const SCHEMA: &str = "conekit.conic/1";

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("model error: {0}")]
    Model(String),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// One cone block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// n x n positive semidefinite block.
    Psd(usize),
    /// nonnegative orthant of the given length.
    Nonneg(usize),
}

impl BlockKind {
    pub fn size(&self) -> usize {
        match self {
            BlockKind::Psd(n) | BlockKind::Nonneg(n) => *n,
        }
    }

    /// Barrier parameter contribution (block order).
    fn nu(&self) -> usize {
        self.size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Max,
    Min,
}

/// Sparse symmetric block matrix: constraint/objective data.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SparseBlockMat {
    /// (block, i, j, v) with i <= j, on a PSD block.
    pub psd: Vec<(usize, u32, u32, f64)>,
    /// (block, idx, v) on a NONNEG block.
    pub lin: Vec<(usize, u32, f64)>,
}

impl SparseBlockMat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn psd_entry(mut self, block: usize, i: usize, j: usize, v: f64) -> Self {
        self.push_psd(block, i, j, v);
        self
    }

    pub fn lin_entry(mut self, block: usize, idx: usize, v: f64) -> Self {
        self.push_lin(block, idx, v);
        self
    }

    pub fn push_psd(&mut self, block: usize, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.psd.push((block, a as u32, b as u32, v));
    }

    pub fn push_lin(&mut self, block: usize, idx: usize, v: f64) {
        self.lin.push((block, idx as u32, v));
    }

    pub fn nnz(&self) -> usize {
        self.psd.len() + self.lin.len()
    }

    /// <A, X> under the symmetric-triplet convention.
    pub fn inner(&self, x: &BlockMatrix) -> f64 {
        let mut s = 0.0;
        for &(b, i, j, v) in &self.psd {
            let m = x.psd(b);
            s += if i == j {
                v * m.get(i as usize, i as usize)
            } else {
                2.0 * v * m.get(i as usize, j as usize)
            };
        }
        for &(b, idx, v) in &self.lin {
            s += v * x.nonneg(b)[idx as usize];
        }
        s
    }

    pub fn frob_norm(&self) -> f64 {
        let mut s = 0.0;
        for &(_, i, j, v) in &self.psd {
            s += if i == j { v * v } else { 2.0 * v * v };
        }
        for &(_, _, v) in &self.lin {
            s += v * v;
        }
        s.sqrt()
    }

    /// Accumulate this matrix, scaled, into a dense block value.
    pub fn add_into(&self, target: &mut BlockMatrix, scale: f64) {
        for &(b, i, j, v) in &self.psd {
            let m = target.psd_mut(b);
            m.add_sym(i as usize, j as usize, scale * v);
        }
        for &(b, idx, v) in &self.lin {
            target.nonneg_mut(b)[idx as usize] += scale * v;
        }
    }
}

/// Dense value in the cone space (a point of K or of its span).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockMatrix {
    pub blocks: Vec<BlockData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BlockData {
    Psd(SymMatrix),
    Nonneg(Vec<f64>),
}

impl BlockMatrix {
    pub fn zeros(cone: &[BlockKind]) -> Self {
        BlockMatrix {
            blocks: cone
                .iter()
                .map(|k| match k {
                    BlockKind::Psd(n) => BlockData::Psd(SymMatrix::zeros(*n)),
                    BlockKind::Nonneg(n) => BlockData::Nonneg(vec![0.0; *n]),
                })
                .collect(),
        }
    }

    /// Scaled identity in every block.
    pub fn identity(cone: &[BlockKind], scale: f64) -> Self {
        BlockMatrix {
            blocks: cone
                .iter()
                .map(|k| match k {
                    BlockKind::Psd(n) => BlockData::Psd(SymMatrix::identity(*n).scale(scale)),
                    BlockKind::Nonneg(n) => BlockData::Nonneg(vec![scale; *n]),
                })
                .collect(),
        }
    }

    pub fn psd(&self, b: usize) -> &SymMatrix {
        match &self.blocks[b] {
            BlockData::Psd(m) => m,
            _ => panic!("block {b} is not PSD"),
        }
    }

    pub fn psd_mut(&mut self, b: usize) -> &mut SymMatrix {
        match &mut self.blocks[b] {
            BlockData::Psd(m) => m,
            _ => panic!("block {b} is not PSD"),
        }
    }

    pub fn nonneg(&self, b: usize) -> &[f64] {
        match &self.blocks[b] {
            BlockData::Nonneg(v) => v,
            _ => panic!("block {b} is not NONNEG"),
        }
    }

    pub fn nonneg_mut(&mut self, b: usize) -> &mut Vec<f64> {
        match &mut self.blocks[b] {
            BlockData::Nonneg(v) => v,
            _ => panic!("block {b} is not NONNEG"),
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for blk in &mut self.blocks {
            match blk {
                BlockData::Psd(m) => *m = m.scale(s),
                BlockData::Nonneg(v) => v.iter_mut().for_each(|x| *x *= s),
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .map(|blk| match blk {
                BlockData::Psd(m) => m.max_abs(),
                BlockData::Nonneg(v) => v.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
            })
            .fold(0.0_f64, f64::max)
    }
}

/// Linear conic program over PSD and NONNEG blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProblem {
    pub sense: Sense,
    pub cone: Vec<BlockKind>,
    pub objective: SparseBlockMat,
    pub constraints: Vec<(SparseBlockMat, f64)>,
}

impl ConicProblem {
    pub fn new(sense: Sense, cone: Vec<BlockKind>) -> Self {
        ConicProblem { sense, cone, objective: SparseBlockMat::new(), constraints: Vec::new() }
    }

    pub fn add_constraint(&mut self, mat: SparseBlockMat, rhs: f64) -> usize {
        self.constraints.push((mat, rhs));
        self.constraints.len() - 1
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Total barrier order of the cone.
    pub fn total_nu(&self) -> usize {
        self.cone.iter().map(|k| k.nu()).sum()
    }

    fn check_mat(&self, m: &SparseBlockMat, what: &str) -> Result<(), ConicError> {
        for &(b, i, j, v) in &m.psd {
            let err = |msg: String| Err(ConicError::Model(msg));
            match self.cone.get(b) {
                Some(BlockKind::Psd(n)) => {
                    if i as usize >= *n || (j as usize) >= *n || i > j {
                        return err(format!(
                            "{what}: PSD entry ({i},{j}) out of range for block {b} (dim {n})"
                        ));
                    }
                }
                Some(BlockKind::Nonneg(_)) => {
                    return err(format!("{what}: PSD entry on NONNEG block {b}"));
                }
                None => return err(format!("{what}: unknown block {b}")),
            }
            if !v.is_finite() {
                return err(format!("{what}: non-finite coefficient"));
            }
        }
        for &(b, idx, v) in &m.lin {
            let err = |msg: String| Err(ConicError::Model(msg));
            match self.cone.get(b) {
                Some(BlockKind::Nonneg(n)) => {
                    if idx as usize >= *n {
                        return err(format!("{what}: NONNEG index {idx} out of range for block {b}"));
                    }
                }
                Some(BlockKind::Psd(_)) => {
                    return err(format!("{what}: NONNEG entry on PSD block {b}"));
                }
                None => return err(format!("{what}: unknown block {b}")),
            }
            if !v.is_finite() {
                return err(format!("{what}: non-finite coefficient"));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        if self.cone.iter().any(|k| k.size() == 0) {
            return Err(ConicError::Model("empty cone block".into()));
        }
        self.check_mat(&self.objective, "objective")?;
        for (k, (m, rhs)) in self.constraints.iter().enumerate() {
            self.check_mat(m, &format!("constraint {k}"))?;
            if !rhs.is_finite() {
                return Err(ConicError::Model(format!("constraint {k}: non-finite rhs")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "schema": SCHEMA, "problem": self })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ConicError> {
        if v.get("schema").and_then(|s| s.as_str()) != Some(SCHEMA) {
            return Err(ConicError::Model(format!("expected schema {SCHEMA}")));
        }
        serde_json::from_value(v["problem"].clone())
            .map_err(|e| ConicError::Model(format!("bad problem document: {e}")))
    }

    /// Solve with default options at the given tolerance and iteration
    /// cap; the duality-gap tolerance scales with `tol` (10x), matching
    /// the 1e-7 / 1e-6 defaults.
    pub fn solve(&self, tol: f64, max_iters: usize) -> Result<ConicOutcome, ConicError> {
        let opts = SolverOptions { tol, gap_tol: 10.0 * tol, max_iters, ..SolverOptions::default() };
        solver::solve(self, &opts)
    }

    pub fn solve_with(&self, opts: &SolverOptions) -> Result<ConicOutcome, ConicError> {
        solver::solve(self, opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Inaccurate,
}

/// Residual summary attached to every outcome (recomputable through
/// [`certify`]).
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// max_j |<A_j, X> - b_j|
    pub primal_eq: f64,
    /// max entry of |sum_j y_j A_j - Z - C|
    pub dual_eq: f64,
    /// most negative eigenvalue/entry over both X and Z (0 when clean)
    pub cone_violation: f64,
    /// |primal - dual| / (1 + |primal| + |dual|)
    pub duality_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicOutcome {
    pub status: SolveStatus,
    pub primal: BlockMatrix,
    pub dual_y: Vec<f64>,
    pub dual_z: BlockMatrix,
    pub primal_value: f64,
    pub dual_value: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// tolerance the solve was run at
    pub tol: f64,
}

impl ConicOutcome {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "schema": SCHEMA, "outcome": self })
    }
}

/// Feasibility verdict with machine-checkable certificate.
#[derive(Debug, Clone)]
pub enum FeasVerdict {
    /// witness satisfying every constraint and the cone within tol
    Feasible(BlockMatrix),
    /// Farkas-type dual ray: Z = sum_j y_j A_j lies in the cone and
    /// b^T y = -margin < 0.
    Infeasible { ray_y: Vec<f64>, ray_z: BlockMatrix, margin: f64 },
    /// nothing certified; carries the residual picture of the attempt
    Undecided(Residuals),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub gap_tol: f64,
    pub max_iters: usize,
    /// trace-regularization weight used by the feasibility mode; it
    /// perturbs the phase-I dual ray by -feas_reg/||y|| on the
    /// identity, so it must stay far below the certification tolerance
    pub feas_reg: f64,
}

impl Default for SolverOptions {
    /// Defaults tol 1e-7, gap tol 1e-6, 200 iterations; the CONEKIT_TOL
    /// and CONEKIT_MAX_ITERS environment variables override them
    /// process-wide (values outside the accepted ranges are ignored).
    fn default() -> Self {
        let mut opts = SolverOptions { tol: 1e-7, gap_tol: 1e-6, max_iters: 200, feas_reg: 1e-12 };
        if let Some(tol) = std::env::var("CONEKIT_TOL").ok().and_then(|s| s.parse::<f64>().ok()) {
            if (1e-12..=1e-2).contains(&tol) {
                opts.tol = tol;
                opts.gap_tol = 10.0 * tol;
            }
        }
        if let Some(it) = std::env::var("CONEKIT_MAX_ITERS").ok().and_then(|s| s.parse::<usize>().ok()) {
            if (10..=5000).contains(&it) {
                opts.max_iters = it;
            }
        }
        opts
    }
}

#[cfg(test)]
mod tests;
