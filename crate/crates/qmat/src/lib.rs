//! Dense complex linear algebra over ordered multipartite tensor spaces.
//!
//! Everything here works on small square matrices (dimension up to a few
//! hundred) stored densely in row-major order. Subsystem bookkeeping is done
//! through [`TensorSpace`], with the convention that the *first* tensor factor
//! occupies the most significant index block ("big-endian"). All modules in
//! this workspace share that single convention.

use num_complex::Complex;
use thiserror::Error;

pub type C64 = Complex<f64>;

mod eig;
mod matrix;
mod space;

pub use eig::{eigh, eigvalsh};
pub use matrix::ComplexMatrix;
pub use space::TensorSpace;

/// Hermiticity tolerance used by operations that require Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default eigenvalue tolerance for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum QmatError {
    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty factor list")]
    EmptyProduct,
    #[error("matrix is not Hermitian (max |M - M^dag| = {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("unknown subsystem label: {0}")]
    UnknownLabel(String),
    #[error("duplicate subsystem label: {0}")]
    DuplicateLabel(String),
    #[error("invalid tensor space: {0}")]
    InvalidSpace(String),
    #[error("eigensolver did not converge after {0} sweeps")]
    EigNonConvergence(usize),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QmatError>;

/// Kronecker product of the factors in the declared index order.
///
/// The first factor occupies the most significant index block, so
/// `kron(&[a, b])[(i_a * db + i_b, j_a * db + j_b)] = a[(i_a, j_a)] * b[(i_b, j_b)]`.
pub fn kron(factors: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    if factors.is_empty() {
        return Err(QmatError::EmptyProduct);
    }
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        let da = out.dim();
        let db = f.dim();
        let mut next = ComplexMatrix::zeros(da * db);
        for ia in 0..da {
            for ja in 0..da {
                let va = out[(ia, ja)];
                if va == C64::new(0.0, 0.0) {
                    continue;
                }
                for ib in 0..db {
                    for jb in 0..db {
                        next[(ia * db + ib, ja * db + jb)] = va * f[(ib, jb)];
                    }
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Tensor product of state vectors, first factor most significant.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Unnormalized projector |v><v|; its trace equals the squared norm of `v`.
pub fn projector(v: &[C64]) -> ComplexMatrix {
    let n = v.len();
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    m
}

/// Partial trace of `m` over the subsystems of `space` not listed in `keep`.
///
/// The kept subsystems retain their relative order from the space, so the
/// result lives on the ordered space `space.subspace(keep)`. The full trace is
/// preserved: `trace(result) == trace(m)`.
pub fn partial_trace(m: &ComplexMatrix, space: &TensorSpace, keep: &[&str]) -> Result<ComplexMatrix> {
    if m.dim() != space.total_dim() {
        return Err(QmatError::DimensionMismatch {
            expected: space.total_dim(),
            got: m.dim(),
        });
    }
    let keep_pos = space.positions(keep)?;
    let n = space.len();
    let mut is_kept = vec![false; n];
    for &p in &keep_pos {
        is_kept[p] = true;
    }
    let dims = space.dims();
    let strides = space.strides();
    let kept: Vec<usize> = (0..n).filter(|&k| is_kept[k]).collect();
    let traced: Vec<usize> = (0..n).filter(|&k| !is_kept[k]).collect();
    let dim_out: usize = kept.iter().map(|&k| dims[k]).product();
    let dim_tr: usize = traced.iter().map(|&k| dims[k]).product();

    // base index for each multi-index over the kept (resp. traced) subsystems
    let expand = |subsys: &[usize], mut flat: usize| -> usize {
        let mut base = 0;
        for &k in subsys.iter().rev() {
            base += (flat % dims[k]) * strides[k];
            flat /= dims[k];
        }
        base
    };

    let mut out = ComplexMatrix::zeros(dim_out.max(1));
    for io in 0..dim_out.max(1) {
        let ibase = expand(&kept, io);
        for jo in 0..dim_out.max(1) {
            let jbase = expand(&kept, jo);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dim_tr.max(1) {
                let tbase = expand(&traced, t);
                acc += m[(ibase + tbase, jbase + tbase)];
            }
            out[(io, jo)] = acc;
        }
    }
    Ok(out)
}

/// Reorder the subsystems of a state vector from `space`'s order to `new_order`.
pub fn permute_state(v: &[C64], space: &TensorSpace, new_order: &[&str]) -> Result<Vec<C64>> {
    if v.len() != space.total_dim() {
        return Err(QmatError::DimensionMismatch {
            expected: space.total_dim(),
            got: v.len(),
        });
    }
    let pos = space.positions(new_order)?;
    if pos.len() != space.len() {
        return Err(QmatError::InvalidSpace(
            "permutation must list every label exactly once".into(),
        ));
    }
    let dims = space.dims();
    let strides = space.strides();
    let new_dims: Vec<usize> = pos.iter().map(|&p| dims[p]).collect();
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    let n = space.len();
    for (inew, slot) in out.iter_mut().enumerate() {
        // digits of inew in the new ordering, mapped back to old flat index
        let mut rest = inew;
        let mut iold = 0;
        for k in (0..n).rev() {
            let digit = rest % new_dims[k];
            rest /= new_dims[k];
            iold += digit * strides[pos[k]];
        }
        *slot = v[iold];
    }
    Ok(out)
}

/// True iff the Hermitian matrix `m` has minimum eigenvalue >= -tol.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    let vals = eigvalsh(m)?;
    Ok(vals.first().map_or(true, |&lo| lo >= -tol))
}

/// Overlap <psi|rho|psi> of a density matrix with a pure target state.
///
/// `target` must be a normalized rank-1 projector and `rho` a valid density
/// matrix (unit trace, PSD within 1e-9).
pub fn fidelity_with_pure(target: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    if target.dim() != rho.dim() {
        return Err(QmatError::DimensionMismatch {
            expected: target.dim(),
            got: rho.dim(),
        });
    }
    target.require_hermitian(HERMITIAN_TOL)?;
    rho.require_hermitian(HERMITIAN_TOL)?;
    let tr_t = target.trace();
    if (tr_t.re - 1.0).abs() > 1e-9 || tr_t.im.abs() > 1e-9 {
        return Err(QmatError::InvalidArgument(format!(
            "target projector must have unit trace, got {}",
            tr_t.re
        )));
    }
    // rank-1 projector test: P^2 == P
    let sq = target.matmul(target);
    if sq.max_abs_diff(target) > 1e-9 {
        return Err(QmatError::InvalidArgument(
            "target must be a rank-1 projector".into(),
        ));
    }
    let tr_r = rho.trace();
    if (tr_r.re - 1.0).abs() > 1e-9 || tr_r.im.abs() > 1e-9 {
        return Err(QmatError::InvalidArgument(format!(
            "rho must have unit trace, got {}",
            tr_r.re
        )));
    }
    if !is_psd(rho, PSD_TOL)? {
        return Err(QmatError::InvalidArgument(
            "rho must be positive semidefinite".into(),
        ));
    }
    let f = target.inner(rho);
    debug_assert!(f.im.abs() < 1e-12);
    Ok(f.re.clamp(0.0, 1.0))
}
