//! Problem and solution types for block-diagonal semidefinite programs.
//!
//! A problem maximizes a linear functional over Hermitian PSD block variables
//! and free scalar variables, subject to linear equality constraints:
//!
//! ```text
//! maximize    sum_k <C_k, X_k>  +  c . u
//! subject to  sum_k <A_ik, X_k> +  B_i . u  =  b_i      (i = 1..m)
//!             X_k  >= 0  (Hermitian PSD),   u free
//! ```
//!
//! Inequalities are modeled with explicit slack blocks. Coefficient maps are
//! stored as upper-triangle entries; the (j, i) coefficient is implicitly the
//! conjugate of (i, j), which keeps every constraint value real.

use std::collections::HashMap;

use num_complex::Complex;
use qmat::{C64, ComplexMatrix};

use crate::SdpError;

/// One named PSD block variable.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub dim: usize,
}

/// Sparse Hermitian coefficient map over one block: entries (i <= j) -> c.
/// Contributes `c * X_ii` for diagonal entries and `2 Re(conj(c) X_ij)` for
/// off-diagonal ones.
pub type CoeffMap = Vec<(usize, usize, C64)>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearExpr {
    /// block index -> coefficient map
    pub blocks: Vec<(usize, CoeffMap)>,
    /// scalar index -> coefficient
    pub scalars: Vec<(usize, f64)>,
}

impl LinearExpr {
    fn block_map(&mut self, block: usize) -> &mut CoeffMap {
        if let Some(pos) = self.blocks.iter().position(|(b, _)| *b == block) {
            &mut self.blocks[pos].1
        } else {
            self.blocks.push((block, Vec::new()));
            &mut self.blocks.last_mut().unwrap().1
        }
    }

    /// Accumulate a Hermitian coefficient; (i, j) with i > j is folded into
    /// the conjugate upper entry.
    pub fn add_block_entry(&mut self, block: usize, i: usize, j: usize, c: C64) {
        let (i, j, c) = if i <= j { (i, j, c) } else { (j, i, c.conj()) };
        let map = self.block_map(block);
        if let Some(e) = map.iter_mut().find(|(a, b, _)| *a == i && *b == j) {
            e.2 += c;
        } else {
            map.push((i, j, c));
        }
    }

    /// Accumulate the full Hermitian matrix `m` as the coefficient of `block`.
    pub fn add_block_matrix(&mut self, block: usize, m: &ComplexMatrix, scale: f64) {
        for i in 0..m.dim() {
            for j in i..m.dim() {
                let c = m[(i, j)] * scale;
                if c.norm() > 0.0 {
                    self.add_block_entry(block, i, j, c);
                }
            }
        }
    }

    pub fn add_scalar(&mut self, scalar: usize, coef: f64) {
        if let Some(e) = self.scalars.iter_mut().find(|(s, _)| *s == scalar) {
            e.1 += coef;
        } else {
            self.scalars.push((scalar, coef));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|(_, m)| m.is_empty()) && self.scalars.is_empty()
    }

    fn prune(&mut self) {
        for (_, m) in &mut self.blocks {
            m.retain(|(_, _, c)| c.norm() > 0.0);
        }
        self.blocks.retain(|(_, m)| !m.is_empty());
        self.scalars.retain(|(_, c)| *c != 0.0);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub expr: LinearExpr,
    pub rhs: f64,
}

/// Block-diagonal SDP in equality form; the objective is always maximized.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub free_scalars: Vec<String>,
    pub objective: LinearExpr,
    pub constraints: Vec<Constraint>,
    block_index: HashMap<String, usize>,
    scalar_index: HashMap<String, usize>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, name: &str, dim: usize) -> usize {
        assert!(dim >= 1, "block dimension must be >= 1");
        assert!(
            !self.block_index.contains_key(name),
            "duplicate block name {name}"
        );
        let idx = self.blocks.len();
        self.blocks.push(BlockSpec {
            name: name.to_string(),
            dim,
        });
        self.block_index.insert(name.to_string(), idx);
        idx
    }

    pub fn add_free_scalar(&mut self, name: &str) -> usize {
        assert!(
            !self.scalar_index.contains_key(name),
            "duplicate scalar name {name}"
        );
        let idx = self.free_scalars.len();
        self.free_scalars.push(name.to_string());
        self.scalar_index.insert(name.to_string(), idx);
        idx
    }

    pub fn block_named(&self, name: &str) -> Option<usize> {
        self.block_index.get(name).copied()
    }

    pub fn scalar_named(&self, name: &str) -> Option<usize> {
        self.scalar_index.get(name).copied()
    }

    pub fn add_constraint(&mut self, label: &str, mut expr: LinearExpr, rhs: f64) -> usize {
        expr.prune();
        let idx = self.constraints.len();
        self.constraints.push(Constraint {
            label: label.to_string(),
            expr,
            rhs,
        });
        idx
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Find the index of a constraint by label.
    pub fn constraint_named(&self, label: &str) -> Option<usize> {
        self.constraints.iter().position(|c| c.label == label)
    }

    /// True when every coefficient in the problem is real-valued; such
    /// problems are solved directly over real symmetric blocks (for real
    /// data, restricting Hermitian variables to their real parts loses no
    /// generality).
    pub fn is_real(&self) -> bool {
        let expr_real = |e: &LinearExpr| {
            e.blocks
                .iter()
                .all(|(_, m)| m.iter().all(|(_, _, c)| c.im == 0.0))
        };
        expr_real(&self.objective) && self.constraints.iter().all(|c| expr_real(&c.expr))
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let check_expr = |e: &LinearExpr, what: &str| -> Result<(), SdpError> {
            for (b, map) in &e.blocks {
                let Some(spec) = self.blocks.get(*b) else {
                    return Err(SdpError::Malformed(format!(
                        "{what}: unknown block index {b}"
                    )));
                };
                for &(i, j, c) in map {
                    if i > j || j >= spec.dim {
                        return Err(SdpError::Malformed(format!(
                            "{what}: entry ({i},{j}) out of range for block {} (dim {})",
                            spec.name, spec.dim
                        )));
                    }
                    if i == j && c.im != 0.0 {
                        return Err(SdpError::Malformed(format!(
                            "{what}: diagonal coefficient ({i},{i}) of block {} must be real",
                            spec.name
                        )));
                    }
                    if !c.re.is_finite() || !c.im.is_finite() {
                        return Err(SdpError::Malformed(format!("{what}: non-finite coefficient")));
                    }
                }
            }
            for &(s, c) in &e.scalars {
                if s >= self.free_scalars.len() {
                    return Err(SdpError::Malformed(format!(
                        "{what}: unknown scalar index {s}"
                    )));
                }
                if !c.is_finite() {
                    return Err(SdpError::Malformed(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        check_expr(&self.objective, "objective")?;
        for con in &self.constraints {
            check_expr(&con.expr, &format!("constraint `{}`", con.label))?;
            if !con.rhs.is_finite() {
                return Err(SdpError::Malformed(format!(
                    "constraint `{}`: non-finite right-hand side",
                    con.label
                )));
            }
        }
        Ok(())
    }

    /// Evaluate a linear expression against explicit block values and scalars.
    pub fn eval_expr(expr: &LinearExpr, blocks: &[ComplexMatrix], scalars: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (b, map) in &expr.blocks {
            let x = &blocks[*b];
            for &(i, j, c) in map {
                if i == j {
                    acc += c.re * x[(i, i)].re;
                } else {
                    acc += 2.0 * (c.conj() * x[(i, j)]).re;
                }
            }
        }
        for &(s, c) in &expr.scalars {
            acc += c * scalars[s];
        }
        acc
    }

    /// Dense Hermitian matrix of the coefficient map of `block` in `expr`.
    pub fn coeff_matrix(&self, expr: &LinearExpr, block: usize) -> ComplexMatrix {
        let dim = self.blocks[block].dim;
        let mut m = ComplexMatrix::zeros(dim);
        if let Some((_, map)) = expr.blocks.iter().find(|(b, _)| *b == block) {
            for &(i, j, c) in map {
                m[(i, j)] = c;
                if i != j {
                    m[(j, i)] = c.conj();
                }
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Inaccurate,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Inaccurate => "inaccurate",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        };
        f.write_str(s)
    }
}

/// Per-iteration record kept for diagnostics and invariant checks.
#[derive(Clone, Copy, Debug)]
pub struct IterStat {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// complementarity gap <X, Z>, nonnegative along the whole path
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// residual of the identity  dobj - pobj = gap + <Rd,X> - rdu.u + y.rp
    pub identity_defect: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_blocks: Vec<ComplexMatrix>,
    pub scalars: Vec<f64>,
    /// one multiplier per original constraint (zero for rows the presolve
    /// identified as linearly dependent)
    pub dual_multipliers: Vec<f64>,
    pub dual_blocks: Vec<ComplexMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub trace: Vec<IterStat>,
    pub note: Option<String>,
}

impl SdpSolution {
    pub fn objective(&self) -> f64 {
        self.primal_objective
    }
}

pub(crate) fn c64(re: f64) -> C64 {
    Complex::new(re, 0.0)
}
