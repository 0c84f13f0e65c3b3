//! Primal-dual interior-point solver (Nesterov-Todd scaling, adaptive
//! centering) for block-diagonal SDPs with native free-scalar handling.
//!
//! Complex Hermitian problems are solved through the real symmetric embedding
//! of [`crate::embed`]; problems whose data is entirely real are solved
//! directly over real symmetric blocks (for real data the restriction of a
//! Hermitian variable to its real part changes neither feasibility nor the
//! optimum, because conjugation is a feasibility-preserving symmetry).
//!
//! The presolve eliminates rows without block entries by variable
//! substitution, detects free variables with empty columns (an unbounded ray
//! when their objective coefficient is nonzero), and removes linearly
//! dependent rows in declaration order, so duplicated structure never reaches
//! the Newton system. Dropped rows report zero dual multipliers.

use qmat::ComplexMatrix;

use crate::embed::deembed_block;
use crate::linalg::{SymMat, backward_subst, forward_subst, max_psd_step};
use crate::problem::{IterStat, SdpProblem, SdpSolution, SolveStatus};
use crate::{SdpError, SolverOptions};

pub(crate) struct CompiledRow {
    pub rhs: f64,
    /// per-block sparse symmetric coefficients (i <= j)
    pub blocks: Vec<(usize, Vec<(usize, usize, f64)>)>,
    pub free: Vec<(usize, f64)>,
}

impl CompiledRow {
    fn dense_block(&self, block: usize, dim: usize) -> SymMat {
        let mut m = SymMat::zeros(dim);
        if let Some((_, entries)) = self.blocks.iter().find(|(b, _)| *b == block) {
            for &(i, j, c) in entries {
                m.set_sym(i, j, c);
            }
        }
        m
    }

    fn inner_block(&self, block: usize, t: &SymMat) -> f64 {
        let mut acc = 0.0;
        if let Some((_, entries)) = self.blocks.iter().find(|(b, _)| *b == block) {
            for &(i, j, c) in entries {
                acc += c * t.get(i, j) * if i == j { 1.0 } else { 2.0 };
            }
        }
        acc
    }
}

pub(crate) struct Compiled {
    pub dims: Vec<usize>,
    pub c_blocks: Vec<SymMat>,
    pub c_free: Vec<f64>,
    pub rows: Vec<CompiledRow>,
    pub nfree: usize,
}

/// Record of a pure-free row eliminated in presolve.
struct FreeElim {
    orig_row: usize,
    pivot_var: usize,
    pivot_coef: f64,
    /// remaining terms of the eliminated row: u_pivot = (rhs - sum coef*u)/pivot
    terms: Vec<(usize, f64)>,
    rhs: f64,
    /// original objective coefficient of the pivot variable
    c_orig: f64,
    /// original column of the pivot variable over all other original rows
    column: Vec<(usize, f64)>,
}

pub(crate) fn compile(problem: &SdpProblem, embed: bool) -> Compiled {
    let dims: Vec<usize> = problem
        .blocks
        .iter()
        .map(|b| if embed { 2 * b.dim } else { b.dim })
        .collect();
    let nfree = problem.free_scalars.len();

    let map_expr = |expr: &crate::problem::LinearExpr| -> (Vec<(usize, Vec<(usize, usize, f64)>)>, Vec<(usize, f64)>) {
        let mut blocks = Vec::new();
        for (b, map) in &expr.blocks {
            let n = problem.blocks[*b].dim;
            let mut entries: Vec<(usize, usize, f64)> = Vec::new();
            let mut push = |i: usize, j: usize, v: f64| {
                if v == 0.0 {
                    return;
                }
                if let Some(e) = entries.iter_mut().find(|(a, b2, _)| *a == i && *b2 == j) {
                    e.2 += v;
                } else {
                    entries.push((i, j, v));
                }
            };
            for &(i, j, c) in map {
                if embed {
                    if c.re != 0.0 {
                        push(i, j, c.re / 2.0);
                        push(i + n, j + n, c.re / 2.0);
                    }
                    if c.im != 0.0 {
                        push(i, j + n, -c.im / 2.0);
                        if i != j {
                            push(j, i + n, c.im / 2.0);
                        }
                    }
                } else {
                    push(i, j, c.re);
                }
            }
            entries.retain(|&(_, _, v)| v != 0.0);
            if !entries.is_empty() {
                blocks.push((*b, entries));
            }
        }
        (blocks, expr.scalars.clone())
    };

    let (obj_blocks, obj_free) = map_expr(&problem.objective);
    let mut c_blocks: Vec<SymMat> = dims.iter().map(|&d| SymMat::zeros(d)).collect();
    for (b, entries) in &obj_blocks {
        for &(i, j, c) in entries {
            c_blocks[*b].set_sym(i, j, c);
        }
    }
    let mut c_free = vec![0.0; nfree];
    for &(s, c) in &obj_free {
        c_free[s] += c;
    }

    let rows = problem
        .constraints
        .iter()
        .map(|con| {
            let (blocks, free) = map_expr(&con.expr);
            CompiledRow {
                rhs: con.rhs,
                blocks,
                free,
            }
        })
        .collect();

    Compiled {
        dims,
        c_blocks,
        c_free,
        rows,
        nfree,
    }
}

/// Dense coordinates of a row: HS-isometric block entries then free columns.
fn row_coords(row: &CompiledRow, offsets: &[usize], dims: &[usize], nfree: usize, ncols: usize) -> Vec<f64> {
    let mut v = vec![0.0; ncols];
    let sqrt2 = std::f64::consts::SQRT_2;
    for (b, entries) in &row.blocks {
        let base = offsets[*b];
        let d = dims[*b];
        for &(i, j, c) in entries {
            let pos = base + i * d - i * (i + 1) / 2 + j; // upper-triangle packing
            v[pos] = if i == j { c } else { sqrt2 * c };
        }
    }
    let free_base = ncols - nfree;
    for &(s, c) in &row.free {
        v[free_base + s] = c;
    }
    v
}

struct Presolved {
    compiled: Compiled,
    /// kept row index -> original row index
    kept: Vec<usize>,
    elims: Vec<FreeElim>,
    /// free variables fixed to zero (empty columns, zero objective)
    pinned: Vec<usize>,
    /// early status short-circuit (infeasible / unbounded detected here)
    verdict: Option<(SolveStatus, String)>,
}

fn presolve(mut compiled: Compiled) -> Presolved {
    let mut elims: Vec<FreeElim> = Vec::new();

    // 1. eliminate rows with no block entries by substituting a free variable
    loop {
        let Some(ridx) = compiled
            .rows
            .iter()
            .position(|r| r.blocks.is_empty() && !r.free.is_empty())
        else {
            break;
        };
        let row = std::mem::replace(
            &mut compiled.rows[ridx],
            CompiledRow {
                rhs: 0.0,
                blocks: Vec::new(),
                free: Vec::new(),
            },
        );
        let (pivot_pos, &(pivot_var, pivot_coef)) = row
            .free
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.1.abs().partial_cmp(&b.1.1.abs()).unwrap())
            .unwrap();
        let mut terms = row.free.clone();
        terms.remove(pivot_pos);
        // original column of the pivot variable (for dual reconstruction)
        let column: Vec<(usize, f64)> = compiled
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ridx)
            .flat_map(|(i, r)| {
                r.free
                    .iter()
                    .filter(|(s, _)| *s == pivot_var)
                    .map(move |&(_, c)| (i, c))
            })
            .collect();
        // substitute u_pivot = (rhs - sum terms)/pivot into every other row
        for r in compiled.rows.iter_mut() {
            let Some(pos) = r.free.iter().position(|(s, _)| *s == pivot_var) else {
                continue;
            };
            let coef = r.free[pos].1;
            r.free.remove(pos);
            let ratio = coef / pivot_coef;
            r.rhs -= ratio * row.rhs;
            for &(s, c) in &terms {
                if let Some(e) = r.free.iter_mut().find(|(t, _)| *t == s) {
                    e.1 -= ratio * c;
                } else {
                    r.free.push((s, -ratio * c));
                }
            }
            r.free.retain(|&(_, c)| c != 0.0);
        }
        // objective substitution
        let c_orig = compiled.c_free[pivot_var];
        if c_orig != 0.0 {
            let ratio = c_orig / pivot_coef;
            for &(s, c) in &terms {
                compiled.c_free[s] -= ratio * c;
            }
            // constant term ratio*rhs is reinstated when reporting objectives
        }
        compiled.c_free[pivot_var] = 0.0;
        elims.push(FreeElim {
            orig_row: ridx,
            pivot_var,
            pivot_coef,
            terms,
            rhs: row.rhs,
            c_orig,
            column,
        });
    }
    // rows that became fully empty through substitution: feasibility checks
    let mut verdict = None;
    for (i, r) in compiled.rows.iter().enumerate() {
        if r.blocks.is_empty() && r.free.is_empty() && !elims.iter().any(|e| e.orig_row == i) {
            if r.rhs.abs() > 1e-8 {
                verdict = Some((
                    SolveStatus::Infeasible,
                    format!("row {i} reduced to 0 = {:.3e}", r.rhs),
                ));
            }
        }
    }

    // 2. free variables with empty columns
    let mut pinned = Vec::new();
    let eliminated: Vec<usize> = elims.iter().map(|e| e.pivot_var).collect();
    for s in 0..compiled.nfree {
        if eliminated.contains(&s) {
            continue;
        }
        let colmax = compiled
            .rows
            .iter()
            .flat_map(|r| r.free.iter().filter(|(t, _)| *t == s).map(|(_, c)| c.abs()))
            .fold(0.0f64, f64::max);
        if colmax <= 1e-12 {
            if compiled.c_free[s].abs() > 1e-12 && verdict.is_none() {
                verdict = Some((
                    SolveStatus::Unbounded,
                    format!(
                        "free variable {s} has an empty constraint column and objective coefficient {:.3e}",
                        compiled.c_free[s]
                    ),
                ));
            }
            pinned.push(s);
        }
    }

    // 3. linearly dependent rows, detected in declaration order
    let offsets: Vec<usize> = {
        let mut off = Vec::with_capacity(compiled.dims.len());
        let mut acc = 0usize;
        for &d in &compiled.dims {
            off.push(acc);
            acc += d * (d + 1) / 2;
        }
        off
    };
    let ncols = offsets.last().map_or(0, |&o| o)
        + compiled.dims.last().map_or(0, |&d| d * (d + 1) / 2)
        + compiled.nfree;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut basis_rhs: Vec<f64> = Vec::new();
    let mut kept = Vec::new();
    let mut kept_rows = Vec::new();
    for (i, row) in compiled.rows.iter().enumerate() {
        if elims.iter().any(|e| e.orig_row == i) {
            continue;
        }
        if row.blocks.is_empty() && row.free.is_empty() {
            continue; // consistent empty row
        }
        let mut v = row_coords(row, &offsets, &compiled.dims, compiled.nfree, ncols);
        let norm0: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut rhs = row.rhs;
        for _pass in 0..2 {
            for (b, br) in basis.iter().zip(&basis_rhs) {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                if dot != 0.0 {
                    for (a, c) in v.iter_mut().zip(b) {
                        *a -= dot * c;
                    }
                    rhs -= dot * br;
                }
            }
        }
        let rem: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rem <= 1e-10 * norm0.max(1.0) {
            if rhs.abs() > 1e-8 && verdict.is_none() {
                verdict = Some((
                    SolveStatus::Infeasible,
                    format!("row {i} is linearly dependent with inconsistent right-hand side {rhs:.3e}"),
                ));
            }
            continue;
        }
        for x in v.iter_mut() {
            *x /= rem;
        }
        rhs /= rem;
        basis.push(v);
        basis_rhs.push(rhs);
        kept.push(i);
        kept_rows.push(i);
    }
    let _ = kept_rows;

    let rows: Vec<CompiledRow> = kept
        .iter()
        .map(|&i| {
            let r = &compiled.rows[i];
            CompiledRow {
                rhs: r.rhs,
                blocks: r.blocks.clone(),
                free: r.free.clone(),
            }
        })
        .collect();
    let compiled = Compiled {
        dims: compiled.dims,
        c_blocks: compiled.c_blocks,
        c_free: compiled.c_free,
        rows,
        nfree: compiled.nfree,
    };
    Presolved {
        compiled,
        kept,
        elims,
        pinned,
        verdict,
    }
}

struct IpmOutcome {
    status: SolveStatus,
    x: Vec<SymMat>,
    z: Vec<SymMat>,
    y: Vec<f64>,
    u: Vec<f64>,
    gap: f64,
    iterations: usize,
    trace: Vec<IterStat>,
    note: Option<String>,
}

#[allow(clippy::needless_range_loop)]
fn ipm(cp: &Compiled, active_free: &[usize], opts: &SolverOptions) -> IpmOutcome {
    let nb = cp.dims.len();
    let m = cp.rows.len();
    let nf = active_free.len();
    let ntot: f64 = cp.dims.iter().map(|&d| d as f64).sum::<f64>().max(1.0);

    let maxb = cp.rows.iter().map(|r| r.rhs.abs()).fold(0.0f64, f64::max);
    let maxc = cp
        .c_blocks
        .iter()
        .map(|c| c.max_abs())
        .fold(0.0f64, f64::max)
        .max(cp.c_free.iter().map(|c| c.abs()).fold(0.0f64, f64::max));
    let scale_b = 1.0 + maxb;
    let scale_c = 1.0 + maxc;

    let xi_p = 10.0f64.max(maxb * 2.0);
    let xi_d = 10.0f64.max(maxc * 2.0);
    let mut x: Vec<SymMat> = cp.dims.iter().map(|&d| SymMat::scaled_identity(d, xi_p)).collect();
    let mut z: Vec<SymMat> = cp.dims.iter().map(|&d| SymMat::scaled_identity(d, xi_d)).collect();
    let mut y = vec![0.0; m];
    let mut u = vec![0.0; nf];

    // rows touching each block
    let mut block_rows: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for (i, r) in cp.rows.iter().enumerate() {
        for (b, _) in &r.blocks {
            block_rows[*b].push(i);
        }
    }
    // B matrix over active free variables
    let free_pos: Vec<Option<usize>> = {
        let mut v = vec![None; cp.nfree];
        for (k, &s) in active_free.iter().enumerate() {
            v[s] = Some(k);
        }
        v
    };
    let mut bmat = vec![0.0; m * nf];
    for (i, r) in cp.rows.iter().enumerate() {
        for &(s, c) in &r.free {
            if let Some(k) = free_pos[s] {
                bmat[i * nf.max(1) + k] = c;
            }
        }
    }
    let c_free_active: Vec<f64> = active_free.iter().map(|&s| cp.c_free[s]).collect();

    let mut trace: Vec<IterStat> = Vec::new();
    let mut status = SolveStatus::Inaccurate;
    let mut note = None;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut best_mu = f64::INFINITY;
    let mut stall = 0usize;

    for iter in 0..opts.max_iterations {
        iterations = iter;
        // residuals
        let mut rp = vec![0.0; m];
        for (i, r) in cp.rows.iter().enumerate() {
            let mut val = 0.0;
            for (b, entries) in &r.blocks {
                let xb = &x[*b];
                for &(ii, jj, c) in entries {
                    val += c * xb.get(ii, jj) * if ii == jj { 1.0 } else { 2.0 };
                }
            }
            for &(s, c) in &r.free {
                if let Some(k) = free_pos[s] {
                    val += c * u[k];
                }
            }
            rp[i] = r.rhs - val;
        }
        let mut rd: Vec<SymMat> = (0..nb)
            .map(|k| {
                let mut mzc = z[k].clone();
                mzc.scale(-1.0);
                mzc.axpy(-1.0, &cp.c_blocks[k]);
                mzc
            })
            .collect();
        for (i, r) in cp.rows.iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for (b, entries) in &r.blocks {
                for &(ii, jj, c) in entries {
                    rd[*b].add_sym(ii, jj, y[i] * c);
                }
            }
        }
        let mut rdu = c_free_active.clone();
        for i in 0..m {
            if y[i] == 0.0 {
                continue;
            }
            for k in 0..nf {
                rdu[k] -= y[i] * bmat[i * nf.max(1) + k];
            }
        }

        gap = (0..nb).map(|k| x[k].inner(&z[k])).sum();
        let mu = gap / ntot;
        let pobj: f64 = (0..nb).map(|k| cp.c_blocks[k].inner(&x[k])).sum::<f64>()
            + c_free_active.iter().zip(&u).map(|(c, v)| c * v).sum::<f64>();
        let dobj: f64 = cp.rows.iter().zip(&y).map(|(r, yi)| r.rhs * yi).sum();
        let prim_res = rp.iter().map(|v| v.abs()).fold(0.0f64, f64::max) / scale_b;
        let dual_res = rd
            .iter()
            .map(|r| r.max_abs())
            .fold(0.0f64, f64::max)
            .max(rdu.iter().map(|v| v.abs()).fold(0.0f64, f64::max))
            / scale_c;
        // identity: dobj - pobj = gap + <Rd, X> - rdu.u + y.rp
        let rd_x: f64 = (0..nb).map(|k| rd[k].inner(&x[k])).sum();
        let rdu_u: f64 = rdu.iter().zip(&u).map(|(a, b)| a * b).sum();
        let y_rp: f64 = y.iter().zip(&rp).map(|(a, b)| a * b).sum();
        let identity_defect = (dobj - pobj) - (gap + rd_x - rdu_u + y_rp);
        trace.push(IterStat {
            primal_objective: pobj,
            dual_objective: dobj,
            gap,
            primal_residual: prim_res,
            dual_residual: dual_res,
            identity_defect,
        });

        let rel_gap = gap / (1.0 + pobj.abs() + dobj.abs());
        if prim_res <= opts.feasibility_tolerance
            && dual_res <= opts.feasibility_tolerance
            && rel_gap <= opts.gap_tolerance
        {
            status = SolveStatus::Optimal;
            break;
        }
        if pobj > 1e10 * scale_b * scale_c && prim_res <= 1e-6 {
            status = SolveStatus::Unbounded;
            note = Some("primal objective diverging with small primal residual".into());
            break;
        }
        if dobj < -1e10 * scale_b * scale_c && dual_res <= 1e-6 {
            status = SolveStatus::Infeasible;
            note = Some("dual objective diverging with small dual residual".into());
            break;
        }
        let metric = rel_gap.max(prim_res).max(dual_res);
        if metric < best_mu * 0.98 {
            best_mu = metric;
            stall = 0;
        } else {
            stall += 1;
            if stall > 40 {
                status = SolveStatus::Inaccurate;
                note = Some("no progress over 40 iterations".into());
                break;
            }
        }

        // NT scaling and factorizations
        let mut w: Vec<SymMat> = Vec::with_capacity(nb);
        let mut zinv: Vec<SymMat> = Vec::with_capacity(nb);
        let mut x_chol: Vec<Vec<f64>> = Vec::with_capacity(nb);
        let mut z_chol: Vec<Vec<f64>> = Vec::with_capacity(nb);
        let mut failed = false;
        for k in 0..nb {
            let (lx, _) = x[k].eigh();
            let lmax = lx.last().copied().unwrap_or(1.0).max(1e-300);
            let floor = lmax * 1e-14;
            let xh = x[k].spectral_map(|v| v.max(floor).sqrt());
            let mmat = z[k].congruence(&xh);
            let (lm, _) = mmat.eigh();
            let mmax = lm.last().copied().unwrap_or(1.0).max(1e-300);
            let mfloor = mmax * 1e-14;
            let minvh = mmat.spectral_map(|v| 1.0 / v.max(mfloor).sqrt());
            let mut wk = minvh.congruence(&xh);
            wk.symmetrize();
            w.push(wk);
            let Some(lz) = z[k].cholesky() else {
                failed = true;
                break;
            };
            // Z^{-1} via triangular solves on identity columns
            let d = cp.dims[k];
            let mut zi = SymMat::zeros(d);
            let mut col = vec![0.0; d];
            for j in 0..d {
                col.iter_mut().for_each(|v| *v = 0.0);
                col[j] = 1.0;
                forward_subst(&lz, d, &mut col);
                backward_subst(&lz, d, &mut col);
                for i in 0..d {
                    zi.a[i * d + j] = col[i];
                }
            }
            zi.symmetrize();
            zinv.push(zi);
            z_chol.push(lz);
            let Some(lxc) = x[k].cholesky() else {
                failed = true;
                break;
            };
            x_chol.push(lxc);
        }
        if failed {
            status = SolveStatus::Inaccurate;
            note = Some("iterate lost positive definiteness".into());
            break;
        }

        // Schur complement S_ij = sum_k <A_i, W A_j W>
        let mut smat = vec![0.0; m * m];
        for k in 0..nb {
            let rows_k = &block_rows[k];
            if rows_k.is_empty() {
                continue;
            }
            let d = cp.dims[k];
            let t_cache: Vec<SymMat> = rows_k
                .iter()
                .map(|&ri| cp.rows[ri].dense_block(k, d).congruence(&w[k]))
                .collect();
            for (ipos, &ri) in rows_k.iter().enumerate() {
                for &rj in rows_k.iter().take(ipos + 1) {
                    let v = cp.rows[rj].inner_block(k, &t_cache[ipos]);
                    smat[ri * m + rj] += v;
                    if ri != rj {
                        smat[rj * m + ri] += v;
                    }
                }
            }
        }
        let s_copy = smat.clone();
        // regularized Cholesky of S
        let diag_max = (0..m).map(|i| smat[i * m + i]).fold(1e-300f64, f64::max);
        let mut s_chol = None;
        for attempt in 0..8 {
            let mut s_try = SymMat { n: m, a: smat.clone() };
            if attempt > 0 {
                let reg = diag_max * 1e-14 * 10f64.powi(attempt as i32 - 1);
                for i in 0..m {
                    s_try.a[i * m + i] += reg;
                }
            }
            if let Some(l) = s_try.cholesky() {
                s_chol = Some(l);
                break;
            }
        }
        let Some(s_chol) = s_chol else {
            status = SolveStatus::Inaccurate;
            note = Some("Schur complement factorization failed".into());
            break;
        };
        let solve_s = |rhs: &[f64]| -> Vec<f64> {
            let mut sol = rhs.to_vec();
            forward_subst(&s_chol, m, &mut sol);
            backward_subst(&s_chol, m, &mut sol);
            // iterative refinement against the unregularized S
            let rhs_norm = rhs.iter().map(|v| v.abs()).fold(1e-300f64, f64::max);
            let mut prev = f64::INFINITY;
            for _round in 0..3 {
                let mut resid = rhs.to_vec();
                for i in 0..m {
                    let mut acc = 0.0;
                    for j in 0..m {
                        acc += s_copy[i * m + j] * sol[j];
                    }
                    resid[i] -= acc;
                }
                let rnorm = resid.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
                if rnorm <= 1e-15 * rhs_norm || rnorm >= prev {
                    break;
                }
                prev = rnorm;
                forward_subst(&s_chol, m, &mut resid);
                backward_subst(&s_chol, m, &mut resid);
                for i in 0..m {
                    sol[i] += resid[i];
                }
            }
            sol
        };
        // S^{-1} B, and B^T S^{-1} B assembled in Gram form from the
        // half-solves L^{-1} B so it stays PSD under roundoff even when S is
        // nearly singular
        let mut sinv_b = vec![0.0; m * nf];
        let mut btsb = SymMat::zeros(nf.max(1));
        if nf > 0 {
            let mut half = vec![0.0; m * nf];
            let mut col = vec![0.0; m];
            for kcol in 0..nf {
                for i in 0..m {
                    col[i] = bmat[i * nf + kcol];
                }
                forward_subst(&s_chol, m, &mut col);
                for i in 0..m {
                    half[i * nf + kcol] = col[i];
                }
                backward_subst(&s_chol, m, &mut col);
                for i in 0..m {
                    sinv_b[i * nf + kcol] = col[i];
                }
            }
            for a in 0..nf {
                for bb in a..nf {
                    let mut acc = 0.0;
                    for i in 0..m {
                        acc += half[i * nf + a] * half[i * nf + bb];
                    }
                    btsb.set_sym(a, bb, acc);
                }
            }
        }
        // redundant free columns (consistent by construction) make this
        // reduced system singular; regularize progressively
        let btsb_chol = if nf > 0 {
            let bdiag_max = (0..nf).map(|i| btsb.get(i, i).abs()).fold(1e-30f64, f64::max);
            let mut found = None;
            for attempt in 0..10 {
                let mut b_try = btsb.clone();
                if attempt > 0 {
                    let reg = bdiag_max * 1e-14 * 10f64.powi(attempt as i32 - 1);
                    for i in 0..nf {
                        b_try.a[i * nf + i] += reg;
                    }
                }
                if let Some(l) = b_try.cholesky() {
                    found = Some(l);
                    break;
                }
            }
            match found {
                Some(l) => Some(l),
                None => {
                    status = SolveStatus::Inaccurate;
                    note = Some("free-variable reduced system is singular".into());
                    break;
                }
            }
        } else {
            None
        };

        // W Rd W, shared by predictor and corrector
        let wrdw: Vec<SymMat> = (0..nb).map(|k| rd[k].congruence(&w[k])).collect();

        let direction = |rc: &[SymMat]| -> (Vec<SymMat>, Vec<f64>, Vec<f64>, Vec<SymMat>) {
            let mut q = vec![0.0; m];
            for (i, r) in cp.rows.iter().enumerate() {
                let mut acc = -rp[i];
                for (b, _) in &r.blocks {
                    acc += r.inner_block(*b, &rc[*b]) - r.inner_block(*b, &wrdw[*b]);
                }
                q[i] = acc;
            }
            let dy0 = solve_s(&q);
            let (dy, du) = if nf > 0 {
                let mut rhs_u = rdu.clone();
                for k in 0..nf {
                    let mut acc = 0.0;
                    for i in 0..m {
                        acc += bmat[i * nf + k] * dy0[i];
                    }
                    rhs_u[k] -= acc;
                }
                let l = btsb_chol.as_ref().unwrap();
                let mut du = rhs_u;
                forward_subst(l, nf, &mut du);
                backward_subst(l, nf, &mut du);
                let mut dy = dy0;
                for i in 0..m {
                    for k in 0..nf {
                        dy[i] += sinv_b[i * nf + k] * du[k];
                    }
                }
                (dy, du)
            } else {
                (dy0, Vec::new())
            };
            let mut dz: Vec<SymMat> = rd.clone();
            for (i, r) in cp.rows.iter().enumerate() {
                if dy[i] == 0.0 {
                    continue;
                }
                for (b, entries) in &r.blocks {
                    for &(ii, jj, c) in entries {
                        dz[*b].add_sym(ii, jj, dy[i] * c);
                    }
                }
            }
            let mut dx: Vec<SymMat> = Vec::with_capacity(nb);
            for k in 0..nb {
                let mut v = rc[k].clone();
                v.axpy(-1.0, &dz[k].congruence(&w[k]));
                v.symmetrize();
                dx.push(v);
            }
            (dx, du, dy, dz)
        };

        // predictor: aim at the boundary (sigma = 0)
        let rc_aff: Vec<SymMat> = (0..nb)
            .map(|k| {
                let mut v = x[k].clone();
                v.scale(-1.0);
                v
            })
            .collect();
        let (dxa, _dua, _dya, dza) = direction(&rc_aff);
        let step_p_aff = (0..nb)
            .map(|k| max_psd_step(&x_chol[k], &dxa[k]))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let step_d_aff = (0..nb)
            .map(|k| max_psd_step(&z_chol[k], &dza[k]))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..nb {
            let mut xt = x[k].clone();
            xt.axpy(step_p_aff, &dxa[k]);
            let mut zt = z[k].clone();
            zt.axpy(step_d_aff, &dza[k]);
            mu_aff += xt.inner(&zt);
        }
        mu_aff /= ntot;
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-8, 1.0);

        // corrector: recenter toward sigma * mu
        let rc: Vec<SymMat> = (0..nb)
            .map(|k| {
                let mut v = zinv[k].clone();
                v.scale(sigma * mu);
                v.axpy(-1.0, &x[k]);
                v
            })
            .collect();
        let (dx, du, dy, dz) = direction(&rc);
        let frac = if rel_gap > 1e-5 { 0.98 } else { 0.995 };
        let mut alpha_p = (0..nb)
            .map(|k| max_psd_step(&x_chol[k], &dx[k]))
            .fold(f64::INFINITY, f64::min)
            .mul_add(frac, 0.0)
            .min(1.0);
        let mut alpha_d = (0..nb)
            .map(|k| max_psd_step(&z_chol[k], &dz[k]))
            .fold(f64::INFINITY, f64::min)
            .mul_add(frac, 0.0)
            .min(1.0);

        // apply with positive-definiteness backtracking
        let mut ok = false;
        for _try in 0..12 {
            let mut xn = x.clone();
            let mut zn = z.clone();
            for k in 0..nb {
                xn[k].axpy(alpha_p, &dx[k]);
                zn[k].axpy(alpha_d, &dz[k]);
            }
            let pd = xn.iter().all(|b| b.cholesky().is_some())
                && zn.iter().all(|b| b.cholesky().is_some());
            if pd {
                x = xn;
                z = zn;
                ok = true;
                break;
            }
            alpha_p *= 0.8;
            alpha_d *= 0.8;
        }
        if !ok {
            status = SolveStatus::Inaccurate;
            note = Some("step backtracking failed to preserve positive definiteness".into());
            break;
        }
        for i in 0..m {
            y[i] += alpha_d * dy[i];
        }
        for k in 0..nf {
            u[k] += alpha_p * du[k];
        }
        if x.iter().any(|b| !b.max_abs().is_finite()) || y.iter().any(|v| !v.is_finite()) {
            status = SolveStatus::Inaccurate;
            note = Some("non-finite iterate".into());
            break;
        }
    }
    if iterations + 1 >= opts.max_iterations && status == SolveStatus::Inaccurate && note.is_none()
    {
        note = Some(format!("iteration limit {} reached", opts.max_iterations));
    }

    IpmOutcome {
        status,
        x,
        z,
        y,
        u,
        gap,
        iterations: iterations + 1,
        trace,
        note,
    }
}

/// Solve a problem to the requested complementarity-gap tolerance.
pub fn solve(problem: &SdpProblem, tol: f64) -> Result<SdpSolution, SdpError> {
    solve_with(problem, &SolverOptions::with_tolerance(tol))
}

pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    problem.validate()?;
    let embed = !problem.is_real();
    let compiled = compile(problem, embed);
    let pre = presolve(compiled);
    if let Some((status, msg)) = pre.verdict {
        return Ok(SdpSolution {
            status,
            primal_blocks: problem
                .blocks
                .iter()
                .map(|b| ComplexMatrix::zeros(b.dim))
                .collect(),
            scalars: vec![0.0; problem.free_scalars.len()],
            dual_multipliers: vec![0.0; problem.num_constraints()],
            dual_blocks: problem
                .blocks
                .iter()
                .map(|b| ComplexMatrix::zeros(b.dim))
                .collect(),
            primal_objective: 0.0,
            dual_objective: 0.0,
            gap: f64::NAN,
            iterations: 0,
            trace: Vec::new(),
            note: Some(msg),
        });
    }

    let eliminated: Vec<usize> = pre.elims.iter().map(|e| e.pivot_var).collect();
    let active_free: Vec<usize> = (0..pre.compiled.nfree)
        .filter(|s| !eliminated.contains(s) && !pre.pinned.contains(s))
        .collect();

    let out = ipm(&pre.compiled, &active_free, opts);

    // free variables: active ones from the solver, eliminated by substitution
    let mut scalars = vec![0.0; problem.free_scalars.len()];
    for (k, &s) in active_free.iter().enumerate() {
        scalars[s] = out.u[k];
    }
    for e in pre.elims.iter().rev() {
        let mut v = e.rhs;
        for &(s, c) in &e.terms {
            v -= c * scalars[s];
        }
        scalars[e.pivot_var] = v / e.pivot_coef;
    }

    // dual multipliers: kept rows from the solver, zero for dropped rows,
    // reconstructed from the pivot column for substituted rows
    let mut duals = vec![0.0; problem.num_constraints()];
    for (kept_idx, &orig) in pre.kept.iter().enumerate() {
        duals[orig] = out.y[kept_idx];
    }
    for e in pre.elims.iter().rev() {
        let mut acc = e.c_orig;
        for &(row, coef) in &e.column {
            acc -= duals[row] * coef;
        }
        duals[e.orig_row] = acc / e.pivot_coef;
    }

    // blocks back to the caller's shape
    let (primal_blocks, dual_blocks): (Vec<ComplexMatrix>, Vec<ComplexMatrix>) = problem
        .blocks
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let to_complex = |s: &SymMat| {
                ComplexMatrix::from_fn(s.n, |i, j| qmat::C64::new(s.get(i, j), 0.0))
            };
            if embed {
                (
                    deembed_block(&to_complex(&out.x[k]), spec.dim),
                    deembed_block(&to_complex(&out.z[k]), spec.dim),
                )
            } else {
                (to_complex(&out.x[k]), to_complex(&out.z[k]))
            }
        })
        .unzip();

    // objectives in the caller's coordinates (including eliminated variables)
    let primal_objective = SdpProblem::eval_expr(&problem.objective, &primal_blocks, &scalars);
    let dual_objective: f64 = problem
        .constraints
        .iter()
        .zip(&duals)
        .map(|(c, y)| c.rhs * y)
        .sum();

    Ok(SdpSolution {
        status: out.status,
        primal_blocks,
        scalars,
        dual_multipliers: duals,
        dual_blocks,
        primal_objective,
        dual_objective,
        gap: out.gap,
        iterations: out.iterations,
        trace: out.trace,
        note: out.note,
    })
}
