//! Hermitian eigendecomposition via cyclic complex Jacobi rotations.
//!
//! Deterministic and accurate for the small dimensions used here (<= a few
//! hundred); no external LAPACK dependency.

use crate::{C64, ComplexMatrix, HERMITIAN_TOL, QmatError, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let (vals, _) = jacobi(m, false)?;
    Ok(vals)
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns).
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (vals, vecs) = jacobi(m, true)?;
    Ok((vals, vecs.expect("vectors requested")))
}

fn jacobi(m: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    m.require_hermitian(HERMITIAN_TOL)?;
    if !m.is_finite() {
        return Err(QmatError::NonFinite);
    }
    let n = m.dim();
    let mut a = m.clone();
    // enforce exact symmetry so rotations stay Hermitian
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = want_vectors.then(|| ComplexMatrix::identity(n));
    let scale = a.max_abs().max(1.0);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let h = apq.norm();
                if h <= 1e-18 * scale {
                    continue;
                }
                // phase w makes the 2x2 block real; then a real Givens rotation
                let w = apq / h;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * h);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // unitary columns: u_p = (c, -s*conj(w)), u_q = (s, c*conj(w))
                let up_p = C64::new(c, 0.0);
                let up_q = -w.conj() * s;
                let uq_p = C64::new(s, 0.0);
                let uq_q = w.conj() * c;

                // rows: A <- U† A
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = up_p.conj() * apj + up_q.conj() * aqj;
                    a[(q, j)] = uq_p.conj() * apj + uq_q.conj() * aqj;
                }
                // columns: A <- A U
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * up_p + aiq * up_q;
                    a[(i, q)] = aip * uq_p + aiq * uq_q;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                if let Some(vm) = v.as_mut() {
                    for i in 0..n {
                        let vip = vm[(i, p)];
                        let viq = vm[(i, q)];
                        vm[(i, p)] = vip * up_p + viq * up_q;
                        vm[(i, q)] = vip * uq_p + viq * uq_q;
                    }
                }
            }
        }
    }
    if !converged {
        // final check after the last sweep
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off > 1e-12 * scale {
            return Err(QmatError::EigNonConvergence(MAX_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vecs = v.map(|vm| {
        ComplexMatrix::from_fn(n, |i, j| vm[(i, order[j])])
    });
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projector;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let m = ComplexMatrix::diag(&[3.0, -1.0, 2.0]);
        let vals = eigvalsh(&m).unwrap();
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_y_spectrum() {
        let sy = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let (vals, vecs) = eigh(&sy).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        // residual check A v = lambda v
        for k in 0..2 {
            let col: Vec<C64> = (0..2).map(|i| vecs[(i, k)]).collect();
            let av = sy.apply(&col);
            for i in 0..2 {
                assert!((av[i] - col[i] * vals[k]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn random_hermitian_reconstruction() {
        // fixed pseudo-random Hermitian matrix, checked by reconstruction
        let n = 6;
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            let d = next();
            m[(i, i)] = c(d, 0.0);
            for j in (i + 1)..n {
                let e = c(next(), next());
                m[(i, j)] = e;
                m[(j, i)] = e.conj();
            }
        }
        let (vals, vecs) = eigh(&m).unwrap();
        // M == V diag(vals) V†
        let recon = ComplexMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| vecs[(i, k)] * vals[k] * vecs[(j, k)].conj()).sum()
        });
        assert!(recon.max_abs_diff(&m) < 1e-12);
        // orthonormality
        let vtv = vecs.dagger().matmul(&vecs);
        assert!(vtv.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
        // ascending order
        for w in vals.windows(2) {
            assert!(w[0] <= w[1] + 1e-15);
        }
    }

    #[test]
    fn projector_has_unit_and_zero_eigenvalues() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = projector(&[c(s, 0.0), c(0.0, s)]);
        let vals = eigvalsh(&p).unwrap();
        assert!(vals[0].abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
    }
}
