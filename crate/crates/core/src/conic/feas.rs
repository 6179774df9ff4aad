//! Feasibility certification through a phase-I program.
//!
//! The feasibility of `{<A_j, X> = b_j, X in K}` is decided by solving
//!
//! ```text
//! max  -s - reg * Tr(X)   s.t.  <A_j, X> + r_j s = b_j,  X in K, s >= 0
//! ```
//!
//! with `r_j = b_j - <A_j, I>`, which is strictly feasible at
//! `(X, s) = (I, 1)`. A vanishing optimal `s` yields a witness; a
//! bounded-away optimum yields, through the phase-I dual variables, a
//! Farkas ray `y` with `sum_j y_j A_j` in the cone and `b^T y < 0`.
//! Verdicts are only issued after the corresponding certificate
//! re-validates; everything else is reported UNDECIDED.

use super::{
    certify::certify, BlockKind, BlockMatrix, ConicError, ConicProblem, FeasVerdict, Residuals,
    Sense, SolverOptions,
};
use crate::linalg::eig_sym;

/// Margin factor: infeasibility is declared only when the normalized
/// Farkas ray clears 10x the requested tolerance.
const RAY_MARGIN_FACTOR: f64 = 10.0;

pub fn check_feasibility(problem: &ConicProblem, tol: f64) -> Result<FeasVerdict, ConicError> {
    problem.validate()?;
    let m = problem.constraints.len();
    if m == 0 {
        return Ok(FeasVerdict::Feasible(BlockMatrix::identity(&problem.cone, 1.0)));
    }

    let opts = SolverOptions::default();
    let x0 = BlockMatrix::identity(&problem.cone, 1.0);

    // augmented cone: original blocks plus the scalar s.
    let s_block = problem.cone.len();
    let mut cone = problem.cone.clone();
    cone.push(BlockKind::Nonneg(1));

    let mut aug = ConicProblem::new(Sense::Max, cone);
    // objective: -s - reg * Tr(X)
    aug.objective.push_lin(s_block, 0, -1.0);
    for (b, kind) in problem.cone.iter().enumerate() {
        match kind {
            BlockKind::Psd(n) => {
                for i in 0..*n {
                    aug.objective.push_psd(b, i, i, -opts.feas_reg);
                }
            }
            BlockKind::Nonneg(n) => {
                for i in 0..*n {
                    aug.objective.push_lin(b, i, -opts.feas_reg);
                }
            }
        }
    }
    for (a, b) in &problem.constraints {
        let mut row = a.clone();
        let r = b - a.inner(&x0);
        if r != 0.0 {
            row.push_lin(s_block, 0, r);
        }
        aug.add_constraint(row, *b);
    }

    let solve_tol = (tol * 0.1).clamp(1e-12, 1e-2);
    let run = aug.solve_with(&SolverOptions {
        tol: solve_tol,
        gap_tol: solve_tol.max(1e-9),
        max_iters: opts.max_iters,
        feas_reg: opts.feas_reg,
    })?;

    // candidate witness: drop the s block
    let mut witness = run.primal.clone();
    witness.blocks.truncate(problem.cone.len());
    let b_scale = 1.0
        + problem
            .constraints
            .iter()
            .map(|(_, b)| b.abs())
            .fold(0.0_f64, f64::max);
    let mut worst = 0.0_f64;
    for (a, b) in &problem.constraints {
        worst = worst.max((a.inner(&witness) - b).abs());
    }
    let cone_ok = cone_min_ok(problem, &witness, tol);
    if worst <= tol * b_scale && cone_ok {
        return Ok(FeasVerdict::Feasible(witness));
    }

    // Farkas side: y from the phase-I dual.
    let y = &run.dual_y;
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y_norm > 0.0 {
        let yhat: Vec<f64> = y.iter().map(|v| v / y_norm).collect();
        let bty: f64 = problem
            .constraints
            .iter()
            .zip(&yhat)
            .map(|((_, b), y)| b * y)
            .sum();
        let mut zray = BlockMatrix::zeros(&problem.cone);
        for (j, (a, _)) in problem.constraints.iter().enumerate() {
            a.add_into(&mut zray, yhat[j]);
        }
        let ray_scale = 1.0 + zray.max_abs();
        let mut ray_cone_min = f64::INFINITY;
        for (b, kind) in problem.cone.iter().enumerate() {
            match kind {
                BlockKind::Psd(_) => {
                    ray_cone_min = ray_cone_min.min(eig_sym(zray.psd(b))?.lambda_min());
                }
                BlockKind::Nonneg(_) => {
                    for &v in zray.nonneg(b) {
                        ray_cone_min = ray_cone_min.min(v);
                    }
                }
            }
        }
        let margin = -bty;
        // the trace regularization shifts the assembled ray by
        // -feas_reg/||y|| on the identity; allow for it explicitly
        let reg_shift = opts.feas_reg / y_norm;
        if margin >= RAY_MARGIN_FACTOR * tol && ray_cone_min >= -(tol * ray_scale + 2.0 * reg_shift) {
            return Ok(FeasVerdict::Infeasible { ray_y: yhat, ray_z: zray, margin });
        }
    }

    let report = certify(&run, &aug);
    Ok(FeasVerdict::Undecided(Residuals {
        primal_eq: worst,
        dual_eq: report.dual_eq_inf,
        cone_violation: report.x_cone_min.min(0.0),
        duality_gap: report.gap_rel,
    }))
}

fn cone_min_ok(problem: &ConicProblem, v: &BlockMatrix, tol: f64) -> bool {
    let scale = 1.0 + v.max_abs();
    for (b, kind) in problem.cone.iter().enumerate() {
        match kind {
            BlockKind::Psd(_) => match eig_sym(v.psd(b)) {
                Ok(s) => {
                    if s.lambda_min() < -tol * scale {
                        return false;
                    }
                }
                Err(_) => return false,
            },
            BlockKind::Nonneg(_) => {
                if v.nonneg(b).iter().any(|&x| x < -tol * scale) {
                    return false;
                }
            }
        }
    }
    true
}
