//! Primal-dual path-following interior-point method with Nesterov-Todd
//! scaling and a Mehrotra-style predictor-corrector, over products of
//! PSD and nonnegative blocks.
//!
//! The Newton system is reduced to dense Schur-complement normal
//! equations `S dy = r` with `S_jk = <A_j, W A_k W>`; sparse constraint
//! pairs are contracted directly from entries of the scaling matrix W,
//! so pins and slack ties cost O(1) per pair.
//!
//! Deterministic: no randomization anywhere, fixed evaluation order.

use super::{
    BlockData, BlockKind, BlockMatrix, ConicError, ConicOutcome, ConicProblem, Residuals, Sense,
    SolveStatus, SolverOptions, SparseBlockMat,
};
use crate::linalg::{eig_sym, Mat, SymMatrix};

const STEP_FRACTION: f64 = 0.98;
const HEAVY_NNZ: usize = 48;

struct PsdScaling {
    /// W = R R^T
    w: SymMatrix,
    r: Mat,
    rinv: Mat,
    /// eigenvalues of the scaled point (lambda = Rinv X Rinv^T = R^T Z R)
    d: Vec<f64>,
}

enum Scaling {
    Psd(PsdScaling),
    Nonneg { w: Vec<f64>, d: Vec<f64> },
}


fn nt_scaling_psd(x: &SymMatrix, z: &SymMatrix) -> Result<PsdScaling, ConicError> {
    let n = x.dim();
    let sx = eig_sym(x)?;
    let floor_x = sx.eigenvalues.last().copied().unwrap_or(1.0).abs().max(1.0) * 1e-15;
    let mut sqrt_x = Mat::zeros(n, n);
    let mut isqrt_x = Mat::zeros(n, n);
    for k in 0..n {
        let lam = sx.eigenvalues[k].max(floor_x);
        let (s, si) = (lam.sqrt(), 1.0 / lam.sqrt());
        for i in 0..n {
            let vik = sx.eigenvectors.get(i, k);
            for j in 0..n {
                let vjk = sx.eigenvectors.get(j, k);
                sqrt_x.data[i * n + j] += s * vik * vjk;
                isqrt_x.data[i * n + j] += si * vik * vjk;
            }
        }
    }
    let sqrt_x_sym = SymMatrix::from_fn(n, |i, j| 0.5 * (sqrt_x.get(i, j) + sqrt_x.get(j, i)));
    let m = sqrt_x_sym.congruence(z);
    let sm = eig_sym(&m)?;
    let floor_m = sm.eigenvalues.last().copied().unwrap_or(1.0).abs().max(1e-30) * 1e-15;
    let sig: Vec<f64> = sm.eigenvalues.iter().map(|&s| s.max(floor_m)).collect();
    // R = X^{1/2} Q Sigma^{-1/4},  Rinv = Sigma^{1/4} Q^T X^{-1/2}
    let mut r = sqrt_x.mul(&sm.eigenvectors);
    for k in 0..n {
        let sc = sig[k].powf(-0.25);
        for i in 0..n {
            r.data[i * n + k] *= sc;
        }
    }
    let mut rinv = sm.eigenvectors.transpose().mul(&isqrt_x);
    for k in 0..n {
        let sc = sig[k].powf(0.25);
        for j in 0..n {
            rinv.data[k * n + j] *= sc;
        }
    }
    let rt = r.transpose();
    let w_raw = r.mul(&rt);
    let w = SymMatrix::from_fn(n, |i, j| 0.5 * (w_raw.get(i, j) + w_raw.get(j, i)));
    let d: Vec<f64> = sig.iter().map(|s| s.sqrt()).collect();
    Ok(PsdScaling { w, r, rinv, d })
}

/// Congruence P * A * P^T for general P.
fn sandwich(p: &Mat, a: &SymMatrix) -> SymMatrix {
    let pt = p.transpose();
    a.congruence_by(&pt)
}

fn triplet_dot(triplets: &[(u32, u32, f64)], m: &SymMatrix) -> f64 {
    let mut s = 0.0;
    for &(i, j, v) in triplets {
        s += if i == j {
            v * m.get(i as usize, i as usize)
        } else {
            2.0 * v * m.get(i as usize, j as usize)
        };
    }
    s
}

/// <E_ab, W E_cd W> for symmetric elementary pairs, contracted from W.
#[inline]
fn elementary_pair(w: &SymMatrix, a: usize, b: usize, c: usize, d: usize) -> f64 {
    if a == b {
        if c == d {
            let wac = w.get(a, c);
            wac * wac
        } else {
            2.0 * w.get(a, c) * w.get(a, d)
        }
    } else if c == d {
        2.0 * w.get(a, c) * w.get(b, c)
    } else {
        2.0 * (w.get(a, c) * w.get(b, d) + w.get(a, d) * w.get(b, c))
    }
}

struct ConstraintIndex {
    /// per PSD block: (constraint id, triplets on that block)
    psd_by_block: Vec<Vec<(usize, Vec<(u32, u32, f64)>)>>,
    /// per NONNEG block, per entry: (constraint id, coefficient)
    lin_by_entry: Vec<Vec<Vec<(usize, f64)>>>,
}

fn build_index(p: &ConicProblem) -> ConstraintIndex {
    let nb = p.cone.len();
    let mut psd_by_block: Vec<Vec<(usize, Vec<(u32, u32, f64)>)>> = vec![Vec::new(); nb];
    let mut lin_by_entry: Vec<Vec<Vec<(usize, f64)>>> = p
        .cone
        .iter()
        .map(|k| match k {
            BlockKind::Nonneg(n) => vec![Vec::new(); *n],
            _ => Vec::new(),
        })
        .collect();
    for (j, (mat, _)) in p.constraints.iter().enumerate() {
        let mut per_block: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); nb];
        for &(b, i, k, v) in &mat.psd {
            per_block[b].push((i, k, v));
        }
        for (b, list) in per_block.into_iter().enumerate() {
            if !list.is_empty() {
                psd_by_block[b].push((j, list));
            }
        }
        for &(b, idx, v) in &mat.lin {
            lin_by_entry[b][idx as usize].push((j, v));
        }
    }
    ConstraintIndex { psd_by_block, lin_by_entry }
}

/// Dense Cholesky with escalating ridge; solves in place.
struct SchurFactor {
    l: Vec<f64>,
    m: usize,
}

impl SchurFactor {
    fn factor(s: &[f64], m: usize) -> Option<SchurFactor> {
        let max_diag = (0..m).map(|i| s[i * m + i].abs()).fold(0.0_f64, f64::max).max(1.0);
        let mut ridge = 0.0;
        for attempt in 0..8 {
            if attempt > 0 {
                ridge = max_diag * 1e-14 * 10f64.powi(attempt as i32 - 1);
            }
            let mut l = s.to_vec();
            if Self::try_chol(&mut l, m, ridge) {
                return Some(SchurFactor { l, m });
            }
        }
        None
    }

    fn try_chol(a: &mut [f64], m: usize, ridge: f64) -> bool {
        for i in 0..m {
            a[i * m + i] += ridge;
        }
        for i in 0..m {
            for j in 0..=i {
                let mut s = a[i * m + j];
                for k in 0..j {
                    s -= a[i * m + k] * a[j * m + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return false;
                    }
                    a[i * m + i] = s.sqrt();
                } else {
                    a[i * m + j] = s / a[j * m + j];
                }
            }
        }
        true
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x = b.to_vec();
        for i in 0..m {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * m + k] * x[k];
            }
            x[i] = s / self.l[i * m + i];
        }
        for i in (0..m).rev() {
            let mut s = x[i];
            for k in (i + 1)..m {
                s -= self.l[k * m + i] * x[k];
            }
            x[i] = s / self.l[i * m + i];
        }
        x
    }
}

struct Workspace {
    x: BlockMatrix,
    y: Vec<f64>,
    z: BlockMatrix,
}

fn apply_constraints(p: &ConicProblem, x: &BlockMatrix) -> Vec<f64> {
    p.constraints.iter().map(|(a, _)| a.inner(x)).collect()
}

/// C + Z - sum_j y_j A_j as a dense block value.
fn dual_residual(p: &ConicProblem, obj: &SparseBlockMat, w: &Workspace) -> BlockMatrix {
    let mut rd = BlockMatrix::zeros(&p.cone);
    obj.add_into(&mut rd, 1.0);
    for (b, blk) in rd.blocks.iter_mut().enumerate() {
        match blk {
            BlockData::Psd(m) => *m = m.add(w.z.psd(b)),
            BlockData::Nonneg(v) => {
                for (t, s) in v.iter_mut().zip(w.z.nonneg(b)) {
                    *t += s;
                }
            }
        }
    }
    for (j, (a, _)) in p.constraints.iter().enumerate() {
        if w.y[j] != 0.0 {
            a.add_into(&mut rd, -w.y[j]);
        }
    }
    rd
}

fn block_inner(a: &BlockMatrix, b: &BlockMatrix) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.blocks.iter().zip(&b.blocks) {
        match (x, y) {
            (BlockData::Psd(m1), BlockData::Psd(m2)) => s += m1.inner(m2),
            (BlockData::Nonneg(v1), BlockData::Nonneg(v2)) => {
                s += v1.iter().zip(v2).map(|(a, b)| a * b).sum::<f64>()
            }
            _ => unreachable!("mismatched block kinds"),
        }
    }
    s
}

/// max step alpha in (0, 1] with V + alpha * dV staying in the cone;
/// computed in the scaled space where the current point is diag(d).
fn max_step(
    cone: &[BlockKind],
    scalings: &[Scaling],
    dv_scaled: &[Option<SymMatrix>],
    dv: &BlockMatrix,
    primal_side: bool,
) -> Result<f64, ConicError> {
    let mut alpha: f64 = 1.0 / STEP_FRACTION; // allows full steps after scaling back
    for (b, kind) in cone.iter().enumerate() {
        match kind {
            BlockKind::Psd(_) => {
                let sc = match &scalings[b] {
                    Scaling::Psd(s) => s,
                    _ => unreachable!(),
                };
                let dt = dv_scaled[b].as_ref().unwrap();
                let n = dt.dim();
                let t = SymMatrix::from_fn(n, |i, j| {
                    dt.get(i, j) / (sc.d[i].sqrt() * sc.d[j].sqrt())
                });
                let lam_min = eig_sym(&t)?.lambda_min();
                if lam_min < 0.0 {
                    alpha = alpha.min(-1.0 / lam_min);
                }
            }
            BlockKind::Nonneg(n) => {
                let (w, d) = match &scalings[b] {
                    Scaling::Nonneg { w, d } => (w, d),
                    _ => unreachable!(),
                };
                let dvv = dv.nonneg(b);
                for i in 0..*n {
                    // scaled direction entry; current scaled point is d[i]
                    let scaled = if primal_side { dvv[i] / w[i] } else { dvv[i] * w[i] };
                    if scaled < 0.0 {
                        alpha = alpha.min(-d[i] / scaled);
                    }
                }
            }
        }
    }
    Ok((alpha * STEP_FRACTION).min(1.0))
}

pub(super) fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicOutcome, ConicError> {
    if !(1e-12..=1e-2).contains(&opts.tol) {
        return Err(ConicError::Model(format!("tolerance {} outside [1e-12, 1e-2]", opts.tol)));
    }
    problem.validate()?;

    // Internal form is always a maximization.
    let flip = match problem.sense {
        Sense::Max => 1.0,
        Sense::Min => -1.0,
    };
    let mut obj = problem.objective.clone();
    if flip < 0.0 {
        for t in &mut obj.psd {
            t.3 = -t.3;
        }
        for t in &mut obj.lin {
            t.2 = -t.2;
        }
    }

    let cone = &problem.cone;
    let m = problem.constraints.len();
    let b_vec: Vec<f64> = problem.constraints.iter().map(|(_, b)| *b).collect();
    let b_scale = 1.0 + b_vec.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let c_scale = {
        let mut c_dense = BlockMatrix::zeros(cone);
        obj.add_into(&mut c_dense, 1.0);
        1.0 + c_dense.max_abs()
    };
    let index = build_index(problem);

    // Infeasible start at scaled identities.
    let a_norm_max = problem
        .constraints
        .iter()
        .map(|(a, _)| a.frob_norm())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let eta_p = 10.0 * b_scale.max(a_norm_max.sqrt());
    let eta_d = 10.0 * c_scale.max(a_norm_max);
    let mut ws = Workspace {
        x: BlockMatrix::identity(cone, eta_p),
        y: vec![0.0; m],
        z: BlockMatrix::identity(cone, eta_d),
    };

    let nu = problem.total_nu().max(1) as f64;
    let mut best: Option<(f64, ConicOutcome)> = None;
    let mut status = SolveStatus::Inaccurate;
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        iterations = iter;
        // residuals
        let ax = apply_constraints(problem, &ws.x);
        let rp: Vec<f64> = b_vec.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rd = dual_residual(problem, &obj, &ws);
        let pobj = obj.inner(&ws.x);
        let dobj: f64 = b_vec.iter().zip(&ws.y).map(|(b, y)| b * y).sum();
        let relp = rp.iter().fold(0.0_f64, |a, x| a.max(x.abs())) / b_scale;
        let reld = rd.max_abs() / c_scale;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let mu = block_inner(&ws.x, &ws.z) / nu;

        let merit = relp.max(reld).max(gap);
        // user-sense duals: for a Min problem the dual slack satisfies
        // Z = C - sum y_j A_j, i.e. the internal multipliers negate
        let make_outcome = |st: SolveStatus, wsr: &Workspace, res: Residuals| ConicOutcome {
            status: st,
            primal: wsr.x.clone(),
            dual_y: wsr.y.iter().map(|v| flip * v).collect(),
            dual_z: wsr.z.clone(),
            primal_value: flip * pobj,
            dual_value: flip * dobj,
            residuals: res,
            iterations: iter,
            tol: opts.tol,
        };
        let res_now = Residuals {
            primal_eq: rp.iter().fold(0.0_f64, |a, x| a.max(x.abs())),
            dual_eq: rd.max_abs(),
            cone_violation: 0.0,
            duality_gap: gap,
        };
        if best.as_ref().map_or(true, |(bm, _)| merit < *bm) {
            best = Some((merit, make_outcome(SolveStatus::Inaccurate, &ws, res_now)));
        }
        if relp <= opts.tol && reld <= opts.tol && gap <= opts.gap_tol {
            status = SolveStatus::Optimal;
            best = Some((merit, make_outcome(SolveStatus::Optimal, &ws, res_now)));
            break;
        }

        // divergence-based infeasibility certificates
        let y_norm = ws.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if y_norm > 1e8 {
            let yhat: Vec<f64> = ws.y.iter().map(|v| v / y_norm).collect();
            let bty: f64 = b_vec.iter().zip(&yhat).map(|(b, y)| b * y).sum();
            let mut zray = BlockMatrix::zeros(cone);
            for (j, (a, _)) in problem.constraints.iter().enumerate() {
                a.add_into(&mut zray, yhat[j]);
            }
            let mut min_eig = 0.0_f64;
            for (bi, kind) in cone.iter().enumerate() {
                match kind {
                    BlockKind::Psd(_) => {
                        min_eig = min_eig.min(eig_sym(zray.psd(bi))?.lambda_min())
                    }
                    BlockKind::Nonneg(_) => {
                        min_eig =
                            min_eig.min(zray.nonneg(bi).iter().fold(0.0_f64, |a, x| a.min(*x)))
                    }
                }
            }
            if bty < -1e-6 && min_eig > -1e-9 * (1.0 + zray.max_abs()) {
                let out = ConicOutcome {
                    status: SolveStatus::PrimalInfeasible,
                    primal: ws.x.clone(),
                    dual_y: yhat,
                    dual_z: zray,
                    primal_value: flip * pobj,
                    dual_value: flip * dobj,
                    residuals: res_now,
                    iterations: iter,
                    tol: opts.tol,
                };
                return Ok(out);
            }
        }
        let x_norm = ws.x.max_abs();
        if x_norm > 1e9 {
            let mut xhat = ws.x.clone();
            xhat.scale_in_place(1.0 / x_norm);
            let axh = apply_constraints(problem, &xhat);
            let feas_ray = axh.iter().fold(0.0_f64, |a, v| a.max(v.abs())) < 1e-7
                && obj.inner(&xhat) > 1e-7;
            if feas_ray {
                let out = ConicOutcome {
                    status: SolveStatus::DualInfeasible,
                    primal: xhat,
                    dual_y: ws.y.clone(),
                    dual_z: ws.z.clone(),
                    primal_value: flip * pobj,
                    dual_value: flip * dobj,
                    residuals: res_now,
                    iterations: iter,
                    tol: opts.tol,
                };
                return Ok(out);
            }
        }

        // NT scalings
        let mut scalings: Vec<Scaling> = Vec::with_capacity(cone.len());
        for (b, kind) in cone.iter().enumerate() {
            match kind {
                BlockKind::Psd(_) => {
                    scalings.push(Scaling::Psd(nt_scaling_psd(ws.x.psd(b), ws.z.psd(b))?))
                }
                BlockKind::Nonneg(n) => {
                    let xv = ws.x.nonneg(b);
                    let zv = ws.z.nonneg(b);
                    let mut w = Vec::with_capacity(*n);
                    let mut d = Vec::with_capacity(*n);
                    for i in 0..*n {
                        w.push((xv[i] / zv[i]).sqrt());
                        d.push((xv[i] * zv[i]).sqrt());
                    }
                    scalings.push(Scaling::Nonneg { w, d });
                }
            }
        }

        // Schur matrix
        let mut s = vec![0.0; m * m];
        for (b, kind) in cone.iter().enumerate() {
            match kind {
                BlockKind::Psd(_) => {
                    let w = match &scalings[b] {
                        Scaling::Psd(sc) => &sc.w,
                        _ => unreachable!(),
                    };
                    let list = &index.psd_by_block[b];
                    // dense W A W for heavy constraints
                    let mut heavy: Vec<Option<SymMatrix>> = vec![None; list.len()];
                    for (pos, (_, trip)) in list.iter().enumerate() {
                        if trip.len() > HEAVY_NNZ {
                            let mut a_dense = SymMatrix::zeros(w.dim());
                            for &(i, jj, v) in trip {
                                a_dense.add_sym(i as usize, jj as usize, v);
                            }
                            heavy[pos] = Some(w.congruence(&a_dense));
                        }
                    }
                    for (p1, (j, tj)) in list.iter().enumerate() {
                        for (p2, (k, tk)) in list.iter().enumerate().skip(p1) {
                            let val = if let Some(waw) = &heavy[p1] {
                                triplet_dot(tk, waw)
                            } else if let Some(waw) = &heavy[p2] {
                                triplet_dot(tj, waw)
                            } else {
                                let mut acc = 0.0;
                                for &(a1, b1, v1) in tj {
                                    for &(a2, b2, v2) in tk {
                                        acc += v1
                                            * v2
                                            * elementary_pair(
                                                w,
                                                a1 as usize,
                                                b1 as usize,
                                                a2 as usize,
                                                b2 as usize,
                                            );
                                    }
                                }
                                acc
                            };
                            let (lo, hi) = if j <= k { (*j, *k) } else { (*k, *j) };
                            s[lo * m + hi] += val;
                        }
                    }
                }
                BlockKind::Nonneg(n) => {
                    let w = match &scalings[b] {
                        Scaling::Nonneg { w, .. } => w,
                        _ => unreachable!(),
                    };
                    for i in 0..*n {
                        let touch = &index.lin_by_entry[b][i];
                        let wi2 = w[i] * w[i];
                        for (p1, &(j, vj)) in touch.iter().enumerate() {
                            for &(k, vk) in touch.iter().skip(p1) {
                                let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
                                s[lo * m + hi] += wi2 * vj * vk;
                            }
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                s[i * m + j] = s[j * m + i];
            }
        }
        let factor = match SchurFactor::factor(&s, m) {
            Some(f) => f,
            None => break, // hopeless conditioning; return best iterate
        };

        // One direction solve for a given scaled-space target G (per PSD
        // block) / g (per NONNEG block).
        let dir = |g_psd: &[Option<SymMatrix>],
                   g_lin: &[Option<Vec<f64>>]|
         -> Result<(Vec<f64>, BlockMatrix, BlockMatrix), ConicError> {
            // K1 = R G R^T + W Rd W per block
            let mut k1 = BlockMatrix::zeros(cone);
            for (b, kind) in cone.iter().enumerate() {
                match kind {
                    BlockKind::Psd(_) => {
                        let sc = match &scalings[b] {
                            Scaling::Psd(s) => s,
                            _ => unreachable!(),
                        };
                        let g = g_psd[b].as_ref().unwrap();
                        let rgr = sandwich(&sc.r, g);
                        let wrd = sc.w.congruence(rd.psd(b));
                        *k1.psd_mut(b) = rgr.add(&wrd);
                    }
                    BlockKind::Nonneg(n) => {
                        let (w, _) = match &scalings[b] {
                            Scaling::Nonneg { w, d } => (w, d),
                            _ => unreachable!(),
                        };
                        let g = g_lin[b].as_ref().unwrap();
                        let rdv = rd.nonneg(b);
                        let out = k1.nonneg_mut(b);
                        for i in 0..*n {
                            out[i] = w[i] * g[i] + w[i] * w[i] * rdv[i];
                        }
                    }
                }
            }
            let mut rhs = vec![0.0; m];
            for (j, (a, _)) in problem.constraints.iter().enumerate() {
                rhs[j] = a.inner(&k1) - rp[j];
            }
            let mut dy = factor.solve(&rhs);
            // one step of iterative refinement on the normal equations
            let mut resid = vec![0.0; m];
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += s[i * m + j] * dy[j];
                }
                resid[i] = rhs[i] - acc;
            }
            let corr = factor.solve(&resid);
            for i in 0..m {
                dy[i] += corr[i];
            }

            // dZ = sum dy_j A_j - Rd
            let mut dz = BlockMatrix::zeros(cone);
            for (j, (a, _)) in problem.constraints.iter().enumerate() {
                if dy[j] != 0.0 {
                    a.add_into(&mut dz, dy[j]);
                }
            }
            for (b, blk) in dz.blocks.iter_mut().enumerate() {
                match blk {
                    BlockData::Psd(mm) => *mm = mm.sub(rd.psd(b)),
                    BlockData::Nonneg(v) => {
                        for (t, r) in v.iter_mut().zip(rd.nonneg(b)) {
                            *t -= r;
                        }
                    }
                }
            }
            // dX = R G R^T - W dZ W = K1 - W Rd W - W dZ W
            let mut dx = BlockMatrix::zeros(cone);
            for (b, kind) in cone.iter().enumerate() {
                match kind {
                    BlockKind::Psd(_) => {
                        let sc = match &scalings[b] {
                            Scaling::Psd(s) => s,
                            _ => unreachable!(),
                        };
                        let g = g_psd[b].as_ref().unwrap();
                        let rgr = sandwich(&sc.r, g);
                        let wdzw = sc.w.congruence(dz.psd(b));
                        *dx.psd_mut(b) = rgr.sub(&wdzw);
                    }
                    BlockKind::Nonneg(n) => {
                        let w = match &scalings[b] {
                            Scaling::Nonneg { w, .. } => w,
                            _ => unreachable!(),
                        };
                        let g = g_lin[b].as_ref().unwrap();
                        let dzv = dz.nonneg(b);
                        let out = dx.nonneg_mut(b);
                        for i in 0..*n {
                            out[i] = w[i] * g[i] - w[i] * w[i] * dzv[i];
                        }
                    }
                }
            }
            Ok((dy, dx, dz))
        };

        // Predictor (affine scaling): G = -diag(d).
        let mut g_psd: Vec<Option<SymMatrix>> = vec![None; cone.len()];
        let mut g_lin: Vec<Option<Vec<f64>>> = vec![None; cone.len()];
        for (b, kind) in cone.iter().enumerate() {
            match kind {
                BlockKind::Psd(_) => {
                    let sc = match &scalings[b] {
                        Scaling::Psd(s) => s,
                        _ => unreachable!(),
                    };
                    g_psd[b] = Some(SymMatrix::diag(
                        &sc.d.iter().map(|v| -v).collect::<Vec<_>>(),
                    ));
                }
                BlockKind::Nonneg(_) => {
                    let d = match &scalings[b] {
                        Scaling::Nonneg { d, .. } => d,
                        _ => unreachable!(),
                    };
                    g_lin[b] = Some(d.iter().map(|v| -v).collect());
                }
            }
        }
        let (_dy_a, dx_a, dz_a) = dir(&g_psd, &g_lin)?;

        // scaled affine directions (reused for steps and the corrector)
        let mut dxa_scaled: Vec<Option<SymMatrix>> = vec![None; cone.len()];
        let mut dza_scaled: Vec<Option<SymMatrix>> = vec![None; cone.len()];
        for (b, kind) in cone.iter().enumerate() {
            if let BlockKind::Psd(_) = kind {
                let sc = match &scalings[b] {
                    Scaling::Psd(s) => s,
                    _ => unreachable!(),
                };
                dxa_scaled[b] = Some(sandwich(&sc.rinv, dx_a.psd(b)));
                dza_scaled[b] = Some({
                    let rt = sc.r.transpose();
                    sandwich(&rt, dz_a.psd(b))
                });
            }
        }
        let alpha_pa = max_step(cone, &scalings, &dxa_scaled, &dx_a, true)?;
        let alpha_da = max_step(cone, &scalings, &dza_scaled, &dz_a, false)?;

        // mu after the affine step
        let mut x_aff = ws.x.clone();
        let mut z_aff = ws.z.clone();
        for (b, blk) in x_aff.blocks.iter_mut().enumerate() {
            match blk {
                BlockData::Psd(mm) => *mm = mm.add(&dx_a.psd(b).scale(alpha_pa)),
                BlockData::Nonneg(v) => {
                    for (t, dv) in v.iter_mut().zip(dx_a.nonneg(b)) {
                        *t += alpha_pa * dv;
                    }
                }
            }
        }
        for (b, blk) in z_aff.blocks.iter_mut().enumerate() {
            match blk {
                BlockData::Psd(mm) => *mm = mm.add(&dz_a.psd(b).scale(alpha_da)),
                BlockData::Nonneg(v) => {
                    for (t, dv) in v.iter_mut().zip(dz_a.nonneg(b)) {
                        *t += alpha_da * dv;
                    }
                }
            }
        }
        let mu_aff = (block_inner(&x_aff, &z_aff) / nu).max(0.0);
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 1.0);

        // Corrector: G from RHS = sigma*mu*I - D^2 - sym(dXa~ dZa~).
        for (b, kind) in cone.iter().enumerate() {
            match kind {
                BlockKind::Psd(nb) => {
                    let sc = match &scalings[b] {
                        Scaling::Psd(s) => s,
                        _ => unreachable!(),
                    };
                    let xt = dxa_scaled[b].as_ref().unwrap();
                    let zt = dza_scaled[b].as_ref().unwrap();
                    let n = *nb;
                    // C2 = (xt*zt + zt*xt)/2
                    let mut c2 = vec![0.0; n * n];
                    for i in 0..n {
                        for k in 0..n {
                            let xik = xt.get(i, k);
                            if xik == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                c2[i * n + j] += xik * zt.get(k, j);
                            }
                        }
                    }
                    let g = SymMatrix::from_fn(n, |i, j| {
                        let c2s = 0.5 * (c2[i * n + j] + c2[j * n + i]);
                        let rhs = if i == j {
                            sigma * mu - sc.d[i] * sc.d[i] - c2s
                        } else {
                            -c2s
                        };
                        2.0 * rhs / (sc.d[i] + sc.d[j])
                    });
                    g_psd[b] = Some(g);
                }
                BlockKind::Nonneg(nb) => {
                    let d = match &scalings[b] {
                        Scaling::Nonneg { d, .. } => d,
                        _ => unreachable!(),
                    };
                    let dxv = dx_a.nonneg(b);
                    let dzv = dz_a.nonneg(b);
                    let mut g = Vec::with_capacity(*nb);
                    for i in 0..*nb {
                        let c2 = dxv[i] * dzv[i];
                        g.push((sigma * mu - d[i] * d[i] - c2) / d[i]);
                    }
                    g_lin[b] = Some(g);
                }
            }
        }
        let (dy, dx, dz) = dir(&g_psd, &g_lin)?;

        let mut dx_scaled: Vec<Option<SymMatrix>> = vec![None; cone.len()];
        let mut dz_scaled: Vec<Option<SymMatrix>> = vec![None; cone.len()];
        for (b, kind) in cone.iter().enumerate() {
            if let BlockKind::Psd(_) = kind {
                let sc = match &scalings[b] {
                    Scaling::Psd(s) => s,
                    _ => unreachable!(),
                };
                dx_scaled[b] = Some(sandwich(&sc.rinv, dx.psd(b)));
                dz_scaled[b] = Some({
                    let rt = sc.r.transpose();
                    sandwich(&rt, dz.psd(b))
                });
            }
        }
        let alpha_p = max_step(cone, &scalings, &dx_scaled, &dx, true)?;
        let alpha_d = max_step(cone, &scalings, &dz_scaled, &dz, false)?;

        for (b, blk) in ws.x.blocks.iter_mut().enumerate() {
            match blk {
                BlockData::Psd(mm) => *mm = mm.add(&dx.psd(b).scale(alpha_p)),
                BlockData::Nonneg(v) => {
                    for (t, dv) in v.iter_mut().zip(dx.nonneg(b)) {
                        *t += alpha_p * dv;
                    }
                }
            }
        }
        for (j, dyj) in dy.iter().enumerate() {
            ws.y[j] += alpha_d * dyj;
        }
        for (b, blk) in ws.z.blocks.iter_mut().enumerate() {
            match blk {
                BlockData::Psd(mm) => *mm = mm.add(&dz.psd(b).scale(alpha_d)),
                BlockData::Nonneg(v) => {
                    for (t, dv) in v.iter_mut().zip(dz.nonneg(b)) {
                        *t += alpha_d * dv;
                    }
                }
            }
        }
    }

    let (_, mut out) = best.expect("at least one iterate recorded");
    if status == SolveStatus::Optimal {
        out.status = SolveStatus::Optimal;
    }
    out.iterations = iterations;
    Ok(out)
}
