//! Complex-to-real embedding of Hermitian block problems.
//!
//! Each n x n Hermitian block H maps to the 2n x 2n real symmetric
//! [[Re H, -Im H], [Im H, Re H]]; coefficients carry a global factor 1/2 so
//! objective and constraint values (hence the optimum) are unchanged. Free
//! scalars are lowered to differences of two 1x1 PSD blocks, leaving a pure
//! cone-form problem suitable for the SDPA text format.

use qmat::ComplexMatrix;

use crate::problem::{CoeffMap, LinearExpr, SdpProblem, c64};

/// Map a problem over complex Hermitian blocks (and free scalars) to an
/// equivalent one over real symmetric blocks only.
pub fn embed_complex(problem: &SdpProblem) -> SdpProblem {
    let mut out = SdpProblem::new();
    for b in &problem.blocks {
        out.add_block(&b.name, 2 * b.dim);
    }
    let scalar_block_base = problem.blocks.len();
    for s in &problem.free_scalars {
        out.add_block(&format!("{s}+"), 1);
        out.add_block(&format!("{s}-"), 1);
    }

    let map_expr = |expr: &LinearExpr| -> LinearExpr {
        let mut e = LinearExpr::default();
        for (b, map) in &expr.blocks {
            let n = problem.blocks[*b].dim;
            let mut emb: CoeffMap = Vec::with_capacity(map.len() * 4);
            for &(i, j, c) in map {
                // embed(A)/2 has entries: Re c / 2 at (i,j) and (i+n,j+n);
                // -Im c / 2 at (i, j+n); Im c / 2 at (j, i+n) [upper triangle]
                if c.re != 0.0 {
                    emb.push((i, j, c64(c.re / 2.0)));
                    emb.push((i + n, j + n, c64(c.re / 2.0)));
                }
                if c.im != 0.0 {
                    // upper-triangle entries of the antisymmetric part
                    emb.push((i, j + n, c64(-c.im / 2.0)));
                    if i != j {
                        emb.push((j, i + n, c64(c.im / 2.0)));
                    }
                }
            }
            for (i, j, c) in emb {
                e.add_block_entry(*b, i, j, c);
            }
        }
        for &(s, c) in &expr.scalars {
            e.add_block_entry(scalar_block_base + 2 * s, 0, 0, c64(c));
            e.add_block_entry(scalar_block_base + 2 * s + 1, 0, 0, c64(-c));
        }
        e
    };

    out.objective = map_expr(&problem.objective);
    for con in &problem.constraints {
        let expr = map_expr(&con.expr);
        out.add_constraint(&con.label, expr, con.rhs);
    }
    out
}

/// Recover the complex Hermitian block from its real embedded solution block
/// by averaging the two diagonal copies (the J-average projection).
pub fn deembed_block(x: &ComplexMatrix, n: usize) -> ComplexMatrix {
    debug_assert_eq!(x.dim(), 2 * n);
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (x[(i, j)].re + x[(i + n, j + n)].re);
            let im = 0.5 * (x[(i + n, j)].re - x[(i, j + n)].re);
            m[(i, j)] = qmat::C64::new(re, im);
        }
    }
    // enforce exact Hermiticity
    for i in 0..n {
        m[(i, i)] = qmat::C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    m
}
