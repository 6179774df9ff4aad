use super::*;
use crate::linalg::{eig_sym, SymMatrix};

const SQRT5: f64 = 2.23606797749978969;

/// max <J, X> s.t. Tr X = 1, X_uv = 0 on edges, X PSD (optionally with
/// nonnegativity ties on the non-edges).
fn theta_problem(n: usize, edges: &[(usize, usize)], dnn: bool) -> ConicProblem {
    let mut cone = vec![BlockKind::Psd(n)];
    let nonedges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !edges.contains(&(i, j)) && !edges.contains(&(j, i)))
        .collect();
    if dnn {
        cone.push(BlockKind::Nonneg(nonedges.len()));
    }
    let mut p = ConicProblem::new(Sense::Max, cone);
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
    for &(u, v) in edges {
        p.add_constraint(SparseBlockMat::new().psd_entry(0, u, v, 1.0), 0.0);
    }
    if dnn {
        for (k, &(u, v)) in nonedges.iter().enumerate() {
            // X_uv - s_k = 0  =>  2*X_uv ... use coefficient 1 on psd, -2 on slack
            // <E_uv, X> = 2 X_uv, so tie 2 X_uv - 2 s_k = 0.
            let m = SparseBlockMat::new().psd_entry(0, u, v, 1.0).lin_entry(1, k, -2.0);
            p.add_constraint(m, 0.0);
        }
    }
    p
}

fn c5_edges() -> Vec<(usize, usize)> {
    (0..5).map(|i| (i.min((i + 1) % 5), i.max((i + 1) % 5))).collect()
}

#[test]
fn theta_empty_graph_is_n() {
    let p = theta_problem(3, &[], false);
    let out = p.solve(1e-8, 100).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.primal_value - 3.0).abs() < 1e-6, "got {}", out.primal_value);
}

#[test]
fn theta_complete_graph_is_one() {
    let edges: Vec<(usize, usize)> = (0..3).flat_map(|i| ((i + 1)..3).map(move |j| (i, j))).collect();
    let p = theta_problem(3, &edges, false);
    let out = p.solve(1e-8, 100).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.primal_value - 1.0).abs() < 1e-6, "got {}", out.primal_value);
}

/// The explicit primal/dual pair at sqrt(5) for the pentagon, checked
/// feasible by direct recomputation before the solver is trusted.
#[test]
fn theta_c5_explicit_pair_and_solver() {
    let b = (SQRT5 - 1.0) / 2.0;
    // primal witness: circulant with first row (1, 0, b, b, 0) / 5
    let xstar = SymMatrix::from_fn(5, |i, j| {
        let d = (5 + j as isize - i as isize) as usize % 5;
        let row = [1.0, 0.0, b, b, 0.0];
        row[d] / 5.0
    });
    // feasibility: trace 1, zero on pentagon edges, PSD
    assert!((xstar.trace() - 1.0).abs() < 1e-12);
    for k in 0..5 {
        assert_eq!(xstar.get(k, (k + 1) % 5), 0.0);
    }
    assert!(eig_sym(&xstar).unwrap().lambda_min() > -1e-12);
    let primal_value = xstar.entry_sum();
    assert!((primal_value - SQRT5).abs() < 1e-12, "primal value {primal_value}");

    // dual witness: t = sqrt5, Z circulant (sqrt5, z, 0, 0, z) with
    // z = (5 - sqrt5)/2 satisfies Z - J >= 0 and the support conditions.
    let z = (5.0 - SQRT5) / 2.0;
    let zstar = SymMatrix::from_fn(5, |i, j| {
        let d = (5 + j as isize - i as isize) as usize % 5;
        let row = [SQRT5, z, 0.0, 0.0, z];
        row[d]
    });
    let zmj = zstar.sub(&SymMatrix::ones(5));
    assert!(eig_sym(&zmj).unwrap().lambda_min() > -1e-9);

    // solver agrees with the certified pair
    let p = theta_problem(5, &c5_edges(), false);
    let out = p.solve(1e-8, 200).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.primal_value - SQRT5).abs() < 1e-6, "solver {}", out.primal_value);
    assert!((out.dual_value - SQRT5).abs() < 1e-6);
    // weak duality for a max problem
    assert!(out.primal_value <= out.dual_value + 1e-6);
}

#[test]
fn theta_prime_c5_with_ties() {
    let p = theta_problem(5, &c5_edges(), true);
    let out = p.solve(1e-8, 200).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.primal_value - SQRT5).abs() < 1e-6, "got {}", out.primal_value);
    let report = certify(&out, &p);
    assert!(report.passes(1e-6, 1e-6, 1.0), "certify failed: {report:?}");
}

#[test]
fn lp_only_blocks() {
    // max x0 s.t. x0 + x1 = 1, x >= 0  ->  1
    let mut p = ConicProblem::new(Sense::Max, vec![BlockKind::Nonneg(2)]);
    p.objective.push_lin(0, 0, 1.0);
    p.add_constraint(SparseBlockMat::new().lin_entry(0, 0, 1.0).lin_entry(0, 1, 1.0), 1.0);
    let out = p.solve(1e-9, 100).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.primal_value - 1.0).abs() < 1e-7);
}

#[test]
fn min_sense_reports_user_values() {
    // min Tr X s.t. X_00 = 1, X PSD  ->  1
    let mut p = ConicProblem::new(Sense::Min, vec![BlockKind::Psd(2)]);
    p.objective.push_psd(0, 0, 0, 1.0);
    p.objective.push_psd(0, 1, 1, 1.0);
    p.add_constraint(SparseBlockMat::new().psd_entry(0, 0, 0, 1.0), 1.0);
    let out = p.solve(1e-9, 100).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.primal_value - 1.0).abs() < 1e-7, "got {}", out.primal_value);
    // min-sense weak duality: primal >= dual
    assert!(out.primal_value >= out.dual_value - 1e-7);
}

#[test]
fn feasibility_trace_one() {
    let mut p = ConicProblem::new(Sense::Max, vec![BlockKind::Psd(4)]);
    let mut tr = SparseBlockMat::new();
    for i in 0..4 {
        tr.push_psd(0, i, i, 1.0);
    }
    p.add_constraint(tr, 1.0);
    match check_feasibility(&p, 1e-7).unwrap() {
        FeasVerdict::Feasible(x) => {
            let t: f64 = (0..4).map(|i| x.psd(0).get(i, i)).sum();
            assert!((t - 1.0).abs() < 1e-6);
        }
        v => panic!("expected FEASIBLE, got {v:?}"),
    }
}

#[test]
fn feasibility_negative_trace_infeasible() {
    let mut p = ConicProblem::new(Sense::Max, vec![BlockKind::Psd(3)]);
    let mut tr = SparseBlockMat::new();
    for i in 0..3 {
        tr.push_psd(0, i, i, 1.0);
    }
    p.add_constraint(tr, -1.0);
    match check_feasibility(&p, 1e-7).unwrap() {
        FeasVerdict::Infeasible { ray_y, ray_z, margin } => {
            assert!(margin > 1e-6);
            // re-validate the ray: Z in cone, b^T y = -margin
            assert!(eig_sym(ray_z.psd(0)).unwrap().lambda_min() > -1e-9);
            assert!((ray_y[0] * -1.0 + margin).abs() < 1e-9);
        }
        v => panic!("expected INFEASIBLE, got {v:?}"),
    }
}

#[test]
fn certify_flags_corrupted_witness() {
    let p = theta_problem(3, &[], false);
    let out = p.solve(1e-8, 100).unwrap();
    let good = certify(&out, &p);
    assert!(good.passes(1e-6, 1e-6, 1.0));

    let mut bad = out.clone();
    let m = bad.primal.psd_mut(0);
    let v = m.get(0, 1);
    m.set_sym(0, 1, v + 1.0);
    let report = certify(&bad, &p);
    assert!(!report.passes(1e-6, 1e-6, 1.0));
    // hand-built exact witness: X = J/3
    let mut exact = out.clone();
    *exact.primal.psd_mut(0) = SymMatrix::ones(3).scale(1.0 / 3.0);
    let report = certify(&exact, &p);
    assert!(report.primal_eq_inf < 1e-15);
}

#[test]
fn solver_is_deterministic() {
    let p = theta_problem(5, &c5_edges(), true);
    let a = p.solve(1e-8, 200).unwrap();
    let b = p.solve(1e-8, 200).unwrap();
    assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
    assert_eq!(a.dual_value.to_bits(), b.dual_value.to_bits());
    assert_eq!(a.iterations, b.iterations);
    assert!(matches!(a.status, SolveStatus::Optimal));
    assert_eq!(a.status, b.status);
}

#[test]
fn problem_json_roundtrip() {
    let p = theta_problem(4, &[(0, 1)], true);
    let doc = p.to_json();
    assert_eq!(doc["schema"], SCHEMA);
    let q = ConicProblem::from_json(&doc).unwrap();
    assert_eq!(q.n_constraints(), p.n_constraints());
    let a = p.solve(1e-8, 100).unwrap();
    let b = q.solve(1e-8, 100).unwrap();
    assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
}

#[test]
fn model_errors_are_reported() {
    let mut p = ConicProblem::new(Sense::Max, vec![BlockKind::Psd(2)]);
    p.objective.push_psd(0, 0, 3, 1.0); // out of range
    assert!(matches!(p.solve(1e-8, 10), Err(ConicError::Model(_))));

    let p2 = ConicProblem::new(Sense::Max, vec![BlockKind::Psd(2)]);
    assert!(matches!(p2.solve(1.0, 10), Err(ConicError::Model(_)))); // bad tol
}
