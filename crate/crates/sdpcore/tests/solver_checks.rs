//! Solver correctness checks: small closed-form programs, a brute-force grid
//! oracle for a complex Hermitian instance, duality invariants, and the SDPA
//! round trip.

use num_complex::Complex;
use qmat::{C64, ComplexMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sdpcore::{
    LinearExpr, SdpProblem, SolveStatus, embed_complex, export_sdpa, import_sdpa, solve,
};

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// maximize t subject to t + s = 3, s >= 0 (scalar slack block)
fn lp_bound_problem() -> SdpProblem {
    let mut p = SdpProblem::new();
    let t = p.add_free_scalar("t");
    let s = p.add_block("slack", 1);
    let mut obj = LinearExpr::default();
    obj.add_scalar(t, 1.0);
    p.objective = obj;
    let mut e = LinearExpr::default();
    e.add_scalar(t, 1.0);
    e.add_block_entry(s, 0, 0, c(1.0));
    p.add_constraint("bound", e, 3.0);
    p
}

#[test]
fn lp_sanity() {
    let p = lp_bound_problem();
    let sol = solve(&p, 1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.scalars[0] - 3.0).abs() < 1e-7, "t = {}", sol.scalars[0]);
    assert!((sol.primal_objective - 3.0).abs() < 1e-7);
    assert!((sol.dual_objective - 3.0).abs() < 1e-6);
}

#[test]
fn pure_free_equality_row() {
    // maximize t with t = 3 handled by presolve substitution
    let mut p = SdpProblem::new();
    let t = p.add_free_scalar("t");
    // a dummy block keeps the cone nonempty
    let d = p.add_block("pad", 1);
    let mut obj = LinearExpr::default();
    obj.add_scalar(t, 1.0);
    p.objective = obj;
    let mut e = LinearExpr::default();
    e.add_scalar(t, 1.0);
    p.add_constraint("fix_t", e, 3.0);
    let mut e2 = LinearExpr::default();
    e2.add_block_entry(d, 0, 0, c(1.0));
    p.add_constraint("fix_pad", e2, 1.0);
    let sol = solve(&p, 1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.scalars[0] - 3.0).abs() < 1e-9);
    // the substituted row's multiplier carries the whole objective gradient
    assert!((sol.dual_multipliers[0] - 1.0).abs() < 1e-9);
}

#[test]
fn eigenvalue_bound() {
    // max lambda s.t. lambda I <= diag(1, 2): slack block S = diag(1,2) - lambda I
    let mut p = SdpProblem::new();
    let lam = p.add_free_scalar("lambda");
    let s = p.add_block("slack", 2);
    let mut obj = LinearExpr::default();
    obj.add_scalar(lam, 1.0);
    p.objective = obj;
    for (i, rhs) in [(0usize, 1.0), (1usize, 2.0)] {
        let mut e = LinearExpr::default();
        e.add_scalar(lam, 1.0);
        e.add_block_entry(s, i, i, c(1.0));
        p.add_constraint(&format!("diag{i}"), e, rhs);
    }
    let mut e = LinearExpr::default();
    e.add_block_entry(s, 0, 1, c(1.0));
    p.add_constraint("offdiag", e, 0.0);
    let sol = solve(&p, 1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.scalars[0] - 1.0).abs() < 1e-7, "lambda = {}", sol.scalars[0]);
}

#[test]
fn unbounded_detected() {
    // maximize t with no constraint touching t
    let mut p = SdpProblem::new();
    let t = p.add_free_scalar("t");
    let d = p.add_block("pad", 1);
    let mut obj = LinearExpr::default();
    obj.add_scalar(t, 1.0);
    p.objective = obj;
    let mut e = LinearExpr::default();
    e.add_block_entry(d, 0, 0, c(1.0));
    p.add_constraint("fix_pad", e, 1.0);
    let sol = solve(&p, 1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn infeasible_detected() {
    // X_00 = -1 with X >= 0 is infeasible; the IPM diverges dually
    let mut p = SdpProblem::new();
    let b = p.add_block("x", 1);
    let mut e = LinearExpr::default();
    e.add_block_entry(b, 0, 0, c(1.0));
    p.add_constraint("neg", e, -1.0);
    let sol = solve(&p, 1e-9).unwrap();
    assert!(
        matches!(sol.status, SolveStatus::Infeasible | SolveStatus::Inaccurate),
        "status = {:?}",
        sol.status
    );
}

#[test]
fn inconsistent_dependent_rows_are_infeasible() {
    let mut p = SdpProblem::new();
    let b = p.add_block("x", 2);
    let mut e1 = LinearExpr::default();
    e1.add_block_entry(b, 0, 0, c(1.0));
    p.add_constraint("a", e1.clone(), 1.0);
    p.add_constraint("a_again", e1, 2.0);
    let sol = solve(&p, 1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

/// Complex Hermitian instance solved through the embedding, cross-checked by
/// a three-stage refined grid search over the feasible section of the cone.
#[test]
fn complex_instance_matches_grid_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let mut rand_c = |scale: f64| C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
    // A strictly positive definite so the section <A, X> = 1 is compact
    let g = ComplexMatrix::from_rows(&[
        vec![rand_c(1.0), rand_c(1.0)],
        vec![rand_c(1.0), rand_c(1.0)],
    ])
    .unwrap();
    let a = g.matmul(&g.dagger()).add(&ComplexMatrix::identity(2).scale(c(0.3)));
    let cm = {
        let h = ComplexMatrix::from_rows(&[
            vec![rand_c(1.0), rand_c(1.0)],
            vec![rand_c(1.0), rand_c(1.0)],
        ])
        .unwrap();
        h.add(&h.dagger()).scale(c(0.5))
    };

    let mut p = SdpProblem::new();
    let b = p.add_block("x", 2);
    let mut obj = LinearExpr::default();
    obj.add_block_matrix(b, &cm, 1.0);
    p.objective = obj;
    let mut e = LinearExpr::default();
    e.add_block_matrix(b, &a, 1.0);
    p.add_constraint("section", e, 1.0);
    assert!(!p.is_real());
    let sol = solve(&p, 1e-10).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);

    // brute force: X = [[x1, x3 + i x4], [x3 - i x4, x2]] over the PSD cone.
    // The objective is scale-invariant after projecting onto the section
    // <A, X> = 1 (A is positive definite), so grid points are rescaled onto
    // the section exactly rather than accepted within a tolerance band.
    let objective = |x1: f64, x2: f64, x3: f64, x4: f64| -> Option<f64> {
        if x1 < 0.0 || x2 < 0.0 || x3 * x3 + x4 * x4 > x1 * x2 {
            return None;
        }
        let x = ComplexMatrix::from_rows(&[
            vec![C64::new(x1, 0.0), C64::new(x3, x4)],
            vec![C64::new(x3, -x4), C64::new(x2, 0.0)],
        ])
        .unwrap();
        let con = a.inner(&x).re;
        if con < 1e-9 {
            return None;
        }
        Some(cm.inner(&x).re / con)
    };
    let mut center = (0.5, 0.5, 0.0, 0.0);
    let mut radius = 1.0;
    let mut best = f64::NEG_INFINITY;
    for _stage in 0..5 {
        let steps = 20;
        let mut best_pt = center;
        for i1 in 0..=steps {
            for i2 in 0..=steps {
                for i3 in 0..=steps {
                    for i4 in 0..=steps {
                        let f = |k: usize, c0: f64| c0 - radius + 2.0 * radius * k as f64 / steps as f64;
                        let (x1, x2, x3, x4) = (
                            f(i1, center.0),
                            f(i2, center.1),
                            f(i3, center.2),
                            f(i4, center.3),
                        );
                        if let Some(v) = objective(x1, x2, x3, x4) {
                            if v > best {
                                best = v;
                                best_pt = (x1, x2, x3, x4);
                            }
                        }
                    }
                }
            }
        }
        center = best_pt;
        radius /= 5.0;
    }
    assert!(
        (sol.primal_objective - best).abs() < 1e-4,
        "solver {} vs grid {}",
        sol.primal_objective,
        best
    );
}

#[test]
fn weak_duality_and_complementarity_invariants() {
    let p = lp_bound_problem();
    let sol = solve(&p, 1e-9).unwrap();
    // the exact identity dobj - pobj = gap + <Rd,X> - rdu.u + y.rp holds at
    // every iterate, and the complementarity gap is nonnegative throughout
    for it in &sol.trace {
        assert!(it.gap >= -1e-9, "gap = {}", it.gap);
        assert!(
            it.identity_defect.abs() <= 1e-9 * (1.0 + it.primal_objective.abs() + it.dual_objective.abs()),
            "identity defect {}",
            it.identity_defect
        );
    }
    // complementary slackness per block at optimum
    for (x, z) in sol.primal_blocks.iter().zip(&sol.dual_blocks) {
        let ip = x.inner(z).re.abs();
        assert!(ip <= 10.0 * 1e-9 * 100.0, "per-block <X,Z> = {ip}");
    }
}

#[test]
fn deterministic_resolve() {
    let p = lp_bound_problem();
    let a = solve(&p, 1e-9).unwrap();
    let b = solve(&p, 1e-9).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert!(a.primal_objective.to_bits() == b.primal_objective.to_bits());
    assert!(a.scalars[0].to_bits() == b.scalars[0].to_bits());
}

#[test]
fn sdpa_round_trip_and_resolve() {
    // embed a complex instance, export, import, and compare structurally
    let mut p = SdpProblem::new();
    let b = p.add_block("x", 2);
    let t = p.add_free_scalar("t");
    let mut obj = LinearExpr::default();
    obj.add_scalar(t, 1.0);
    p.objective = obj;
    let mut e = LinearExpr::default();
    e.add_scalar(t, 1.0);
    e.add_block_entry(b, 0, 0, c(1.0));
    e.add_block_entry(b, 0, 1, C64::new(0.25, -0.5));
    p.add_constraint("r1", e, 1.5);
    let mut e2 = LinearExpr::default();
    e2.add_block_entry(b, 1, 1, c(1.0));
    p.add_constraint("r2", e2, 2.0);

    let lowered = embed_complex(&p);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("problem.dat-s");
    export_sdpa(&lowered, &path).unwrap();
    let back = import_sdpa(&path).unwrap();

    assert_eq!(lowered.blocks.len(), back.blocks.len());
    for (x, y) in lowered.blocks.iter().zip(&back.blocks) {
        assert_eq!(x.dim, y.dim);
    }
    assert_eq!(lowered.num_constraints(), back.num_constraints());
    for (cx, cy) in lowered.constraints.iter().zip(&back.constraints) {
        assert!((cx.rhs - cy.rhs).abs() <= 1e-15);
        let same = |ex: &LinearExpr, ey: &LinearExpr| {
            for (blk, map) in &ex.blocks {
                for &(i, j, v) in map {
                    let my = ey
                        .blocks
                        .iter()
                        .find(|(b2, _)| b2 == blk)
                        .and_then(|(_, m2)| m2.iter().find(|(a, b3, _)| *a == i && *b3 == j))
                        .map(|&(_, _, v2)| v2)
                        .unwrap_or_else(|| panic!("missing entry ({i},{j})"));
                    assert!((v - my).norm() <= 1e-15);
                }
            }
        };
        same(&cx.expr, &cy.expr);
        same(&cy.expr, &cx.expr);
    }
    // objective coefficients survive too
    let obj_x = lowered.coeff_matrix(&lowered.objective, 1);
    let obj_y = back.coeff_matrix(&back.objective, 1);
    assert!(obj_x.max_abs_diff(&obj_y) <= 1e-15);

    // the lowered form and the original agree on the optimum
    let s1 = solve(&p, 1e-9).unwrap();
    let s2 = solve(&lowered, 1e-9).unwrap();
    let s3 = solve(&back, 1e-9).unwrap();
    assert!((s1.primal_objective - s2.primal_objective).abs() < 1e-6);
    assert!((s2.primal_objective - s3.primal_objective).abs() < 1e-9);
}

#[test]
fn empty_constraint_export() {
    let mut p = SdpProblem::new();
    p.add_block("x", 2);
    let mut obj = LinearExpr::default();
    obj.add_block_entry(0, 0, 0, c(1.0));
    p.objective = obj;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.dat-s");
    export_sdpa(&p, &path).unwrap();
    let back = import_sdpa(&path).unwrap();
    assert_eq!(back.num_constraints(), 0);
    assert_eq!(back.blocks.len(), 1);
}

#[test]
fn malformed_sdpa_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dat-s");
    std::fs::write(&path, "1\n1\n2\n1.0\n1 1 1 oops 3.0\n").unwrap();
    let err = import_sdpa(&path).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("line 5"), "message: {msg}");
}
