//! The aggregated chromatic program and its explicit dual.
//!
//! The primal couples one block per color count t: it minimizes
//! sum_t t * X^t_{0,0} over DNN blocks subject to the weight
//! normalization, the aggregated rank-one coupling <A^t, X^t> summing
//! to zero, and the per-t orthogonality pins. The dual maximizes
//! lambda over decompositions
//! C - lambda B - mu A - sum y E~ - sum z E~ = P + N per block.
//! Both optimal values coincide (the dual is strictly feasible) and
//! equal the ceiling of the Szegedy bound of the complement.

use super::QRelaxError;
use crate::conic::{BlockKind, ConicOutcome, ConicProblem, Sense, SparseBlockMat};
use crate::graphs::Graph;

/// Snap values within 1e-6 of an integer before floor/ceil.
pub fn guard_snap(x: f64) -> f64 {
    if (x - x.round()).abs() <= 1e-6 {
        x.round()
    } else {
        x
    }
}

pub fn floor_guard(x: f64) -> i64 {
    guard_snap(x).floor() as i64
}

pub fn ceil_guard(x: f64) -> i64 {
    guard_snap(x).ceil() as i64
}

#[derive(Debug, Clone)]
pub struct AggOutcome {
    pub value: f64,
    /// value after guard-band rounding
    pub rounded: i64,
    pub outcome: ConicOutcome,
    pub problem: ConicProblem,
}

fn check_range(g: &Graph, t_range: &[usize]) -> Result<(), QRelaxError> {
    if t_range.is_empty() {
        return Err(QRelaxError::InvalidParameter("empty t range".into()));
    }
    for w in t_range.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(QRelaxError::InvalidParameter("t range must be contiguous".into()));
        }
    }
    if t_range[0] < 1 || *t_range.last().unwrap() > g.n() {
        return Err(QRelaxError::InvalidParameter(format!(
            "t range must lie within [1, {}]",
            g.n()
        )));
    }
    Ok(())
}

/// triplets of the aggregated rank-one matrix A^t = sum_u A^t_u on a
/// given block: n at (0,0), -1 at (0, ui), 1 at (ui, uj) for all i, j.
fn agg_a_triplets(block: usize, n: usize, t: usize, m: &mut SparseBlockMat) {
    let idx = |u: usize, i: usize| 1 + u * t + i;
    m.push_psd(block, 0, 0, n as f64);
    for u in 0..n {
        for i in 0..t {
            m.push_psd(block, 0, idx(u, i), -1.0);
            for j in i..t {
                m.push_psd(block, idx(u, i), idx(u, j), 1.0);
            }
        }
    }
}

/// Per-t zero pins of the aggregated program (O3 and O4).
fn agg_pins(g: &Graph, t: usize) -> Vec<(usize, usize)> {
    let idx = |u: usize, i: usize| 1 + u * t + i;
    let mut pins = Vec::new();
    for &(u, v) in g.edges() {
        for i in 0..t {
            let (a, b) = (idx(u, i), idx(v, i));
            pins.push((a.min(b), a.max(b)));
        }
    }
    for u in 0..g.n() {
        for i in 0..t {
            for j in (i + 1)..t {
                pins.push((idx(u, i), idx(u, j)));
            }
        }
    }
    pins.sort_unstable();
    pins.dedup();
    pins
}

/// Aggregated chromatic primal over the DNN blocks.
pub fn aggregated_chrom(g: &Graph, t_range: &[usize]) -> Result<AggOutcome, QRelaxError> {
    check_range(g, t_range)?;
    let n = g.n();
    let nb = t_range.len();

    // ties: per t, every unpinned off-diagonal pair
    let mut tie_lists: Vec<Vec<(usize, usize)>> = Vec::with_capacity(nb);
    for &t in t_range {
        let dim = n * t + 1;
        let pins: std::collections::BTreeSet<(usize, usize)> = agg_pins(g, t).into_iter().collect();
        let mut ties = Vec::new();
        for a in 0..dim {
            for b in (a + 1)..dim {
                if !pins.contains(&(a, b)) {
                    ties.push((a, b));
                }
            }
        }
        tie_lists.push(ties);
    }
    let total_ties: usize = tie_lists.iter().map(|l| l.len()).sum();

    let mut cone: Vec<BlockKind> = t_range.iter().map(|&t| BlockKind::Psd(n * t + 1)).collect();
    let tie_block = cone.len();
    if total_ties > 0 {
        cone.push(BlockKind::Nonneg(total_ties));
    }
    let mut p = ConicProblem::new(Sense::Min, cone);

    for (k, &t) in t_range.iter().enumerate() {
        p.objective.push_psd(k, 0, 0, t as f64);
    }
    // sum_t X^t_{00} = 1
    let mut m = SparseBlockMat::new();
    for k in 0..nb {
        m.push_psd(k, 0, 0, 1.0);
    }
    p.add_constraint(m, 1.0);
    // sum_t <A^t, X^t> = 0
    let mut m = SparseBlockMat::new();
    for (k, &t) in t_range.iter().enumerate() {
        agg_a_triplets(k, n, t, &mut m);
    }
    p.add_constraint(m, 0.0);
    // per-t pins
    for (k, &t) in t_range.iter().enumerate() {
        for (a, b) in agg_pins(g, t) {
            p.add_constraint(SparseBlockMat::new().psd_entry(k, a, b, 1.0), 0.0);
        }
    }
    // ties
    let mut offset = 0usize;
    for (k, ties) in tie_lists.iter().enumerate() {
        for (j, &(a, b)) in ties.iter().enumerate() {
            let m = SparseBlockMat::new()
                .psd_entry(k, a, b, 0.5)
                .lin_entry(tie_block, offset + j, -1.0);
            p.add_constraint(m, 0.0);
        }
        offset += ties.len();
    }

    let out = p.solve(1e-7, 300)?;
    let value = out.primal_value;
    Ok(AggOutcome { value, rounded: guard_snap(value).round() as i64, outcome: out, problem: p })
}

/// Explicit dual of the aggregated program:
/// sup lambda with C - lambda B - mu A - sum y E~ - sum z E~ in the
/// product of DNN dual blocks (membership realized as P + N with P PSD
/// and N entrywise nonnegative).
///
/// The program is posed on the solver's dual side, where the scalar
/// multipliers are naturally free: one solver constraint per dual
/// variable (lambda, mu, the y and z pin multipliers, and the entries
/// of each N block, the latter slacked to stay nonnegative), with
/// `b = -e_lambda` so that the solver's dual objective is -lambda.
pub fn aggregated_chrom_dual(g: &Graph, t_range: &[usize]) -> Result<AggOutcome, QRelaxError> {
    check_range(g, t_range)?;
    let n = g.n();

    // cone: P^t blocks followed by one nonneg block holding the N-entry
    // slacks of every t
    let mut cone: Vec<BlockKind> = t_range.iter().map(|&t| BlockKind::Psd(n * t + 1)).collect();
    let slack_block = cone.len();
    let total_n: usize = t_range
        .iter()
        .map(|&t| {
            let dim = n * t + 1;
            dim * (dim + 1) / 2
        })
        .sum();
    cone.push(BlockKind::Nonneg(total_n));
    let mut p = ConicProblem::new(Sense::Max, cone);

    // solver objective C: the PSD part is -C_agg = -t E^t_{00}
    for (k, &t) in t_range.iter().enumerate() {
        p.objective.push_psd(k, 0, 0, -(t as f64));
    }

    // constraint per dual variable; rhs b picks out lambda
    // lambda: A = -sum_t E^t_{00}, b = -1
    let mut m = SparseBlockMat::new();
    for k in 0..t_range.len() {
        m.push_psd(k, 0, 0, -1.0);
    }
    p.add_constraint(m, -1.0);
    // mu: A = -sum_t A^t
    let mut m = SparseBlockMat::new();
    for (k, &t) in t_range.iter().enumerate() {
        let mut a = SparseBlockMat::new();
        agg_a_triplets(k, n, t, &mut a);
        for (blk, i, j, v) in a.psd {
            m.push_psd(blk, i as usize, j as usize, -v);
        }
    }
    p.add_constraint(m, 0.0);
    // y^t_{u,v,i} over edges, z^t_{u,i,j} over color pairs: A = -E~
    for (k, &t) in t_range.iter().enumerate() {
        let idx = |u: usize, i: usize| 1 + u * t + i;
        for &(u, v) in g.edges() {
            for i in 0..t {
                p.add_constraint(
                    SparseBlockMat::new().psd_entry(k, idx(u, i), idx(v, i), -1.0),
                    0.0,
                );
            }
        }
        for u in 0..n {
            for i in 0..t {
                for j in (i + 1)..t {
                    p.add_constraint(
                        SparseBlockMat::new().psd_entry(k, idx(u, i), idx(u, j), -1.0),
                        0.0,
                    );
                }
            }
        }
    }
    // N^t entries: A = -E^t_{ab} plus the unit slack keeping N_ab >= 0
    let mut pos = 0usize;
    for (k, &t) in t_range.iter().enumerate() {
        let dim = n * t + 1;
        for a in 0..dim {
            for b in a..dim {
                let row = SparseBlockMat::new()
                    .psd_entry(k, a, b, -1.0)
                    .lin_entry(slack_block, pos, 1.0);
                p.add_constraint(row, 0.0);
                pos += 1;
            }
        }
    }

    let out = p.solve(1e-7, 300)?;
    // the solver's dual objective is -lambda
    let value = -out.dual_value;
    Ok(AggOutcome { value, rounded: guard_snap(value).round() as i64, outcome: out, problem: p })
}
