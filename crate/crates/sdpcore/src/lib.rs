//! Generic semidefinite programming over Hermitian PSD block variables with
//! linear equality constraints, solved by a primal-dual interior-point method
//! with Nesterov-Todd scaling. Includes the complex-to-real embedding and the
//! sparse SDPA text format for interchange with external solvers.
//!
//! Problems maximize a linear functional; model minimization by negating the
//! objective. Inequalities are modeled with explicit slack blocks. Solutions
//! are deterministic given identical inputs: the solver uses no randomness
//! and runs single-threaded.

use thiserror::Error;

mod embed;
mod linalg;
mod problem;
mod sdpa;
mod solver;

pub use embed::{deembed_block, embed_complex};
pub use problem::{
    BlockSpec, CoeffMap, Constraint, IterStat, LinearExpr, SdpProblem, SdpSolution, SolveStatus,
};
pub use sdpa::{export_sdpa, import_sdpa};
pub use solver::{solve, solve_with};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solver failed: {0}")]
    Solver(String),
}

/// Interior-point solver options.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// relative complementarity-gap tolerance
    pub gap_tolerance: f64,
    /// primal/dual residual tolerance (relative to data scale)
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-8,
            feasibility_tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

impl SolverOptions {
    /// Gap tolerance `tol` with a feasibility tolerance reflecting the
    /// attainable Newton-system accuracy (the Schur complement conditioning
    /// floors the primal residual near sqrt(eps) times its condition number).
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            gap_tolerance: tol,
            feasibility_tolerance: (tol.sqrt() * 1e-3).max(tol),
            ..Self::default()
        }
    }
}
