//! Outcome certification: recomputes every residual from scratch using
//! only linalg primitives, independent of solver internals.

use super::{BlockData, BlockKind, BlockMatrix, ConicOutcome, ConicProblem};
use crate::linalg::eig_sym;
use serde::{Deserialize, Serialize};

/// Residuals recomputed from a (problem, outcome) pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualReport {
    /// max_j |<A_j, X> - b_j|
    pub primal_eq_inf: f64,
    /// max entry of |sum_j y_j A_j - Z - C|
    pub dual_eq_inf: f64,
    /// smallest eigenvalue / entry over the primal blocks
    pub x_cone_min: f64,
    /// smallest eigenvalue / entry over the dual blocks
    pub z_cone_min: f64,
    /// recomputed <C, X>
    pub primal_value: f64,
    /// recomputed b^T y
    pub dual_value: f64,
    /// |primal - dual| / (1 + |primal| + |dual|)
    pub gap_rel: f64,
}

impl ResidualReport {
    /// All residuals within tolerance (cone violations measured
    /// relative to the iterate scale).
    pub fn passes(&self, tol: f64, gap_tol: f64, scale: f64) -> bool {
        self.primal_eq_inf <= tol * scale
            && self.dual_eq_inf <= tol * scale
            && self.x_cone_min >= -tol * scale
            && self.z_cone_min >= -tol * scale
            && self.gap_rel <= gap_tol
    }
}

fn cone_min(problem: &ConicProblem, v: &BlockMatrix) -> f64 {
    let mut worst = f64::INFINITY;
    for (b, kind) in problem.cone.iter().enumerate() {
        match kind {
            BlockKind::Psd(_) => {
                let lam = eig_sym(v.psd(b)).map(|s| s.lambda_min()).unwrap_or(f64::NEG_INFINITY);
                worst = worst.min(lam);
            }
            BlockKind::Nonneg(_) => {
                for &x in v.nonneg(b) {
                    worst = worst.min(x);
                }
            }
        }
    }
    if worst == f64::INFINITY {
        0.0
    } else {
        worst
    }
}

/// Recompute all residuals of `outcome` against `problem`.
pub fn certify(outcome: &ConicOutcome, problem: &ConicProblem) -> ResidualReport {
    let x = &outcome.primal;
    let mut primal_eq_inf = 0.0_f64;
    for (a, b) in &problem.constraints {
        primal_eq_inf = primal_eq_inf.max((a.inner(x) - b).abs());
    }

    // dual feasibility in user sense: Z = sum_j y_j A_j - C for a Max
    // problem, Z = C - sum_j y_j A_j for a Min problem
    let sign = match problem.sense {
        super::Sense::Max => 1.0,
        super::Sense::Min => -1.0,
    };
    let mut d = BlockMatrix::zeros(&problem.cone);
    for (j, (a, _)) in problem.constraints.iter().enumerate() {
        a.add_into(&mut d, sign * outcome.dual_y[j]);
    }
    problem.objective.add_into(&mut d, -sign);
    for (b, blk) in d.blocks.iter_mut().enumerate() {
        match blk {
            BlockData::Psd(m) => *m = m.sub(outcome.dual_z.psd(b)),
            BlockData::Nonneg(v) => {
                for (t, z) in v.iter_mut().zip(outcome.dual_z.nonneg(b)) {
                    *t -= z;
                }
            }
        }
    }
    let dual_eq_inf = d.max_abs();

    let primal_value = problem.objective.inner(x);
    let dual_value: f64 = problem
        .constraints
        .iter()
        .zip(&outcome.dual_y)
        .map(|((_, b), y)| b * y)
        .sum();
    let gap_rel =
        (primal_value - dual_value).abs() / (1.0 + primal_value.abs() + dual_value.abs());

    ResidualReport {
        primal_eq_inf,
        dual_eq_inf,
        x_cone_min: cone_min(problem, x),
        z_cone_min: cone_min(problem, &outcome.dual_z),
        primal_value,
        dual_value,
        gap_rel,
    }
}
