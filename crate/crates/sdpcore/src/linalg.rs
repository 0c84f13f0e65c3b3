//! Dense real symmetric matrix kernel used by the interior-point solver.

/// Dense symmetric matrix, full row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    #[cfg(test)]
    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = s;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
        if i != j {
            self.a[j * self.n + i] += v;
        }
    }

    pub fn inner(&self, other: &SymMat) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.a.iter().zip(&other.a).map(|(x, y)| x * y).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn axpy(&mut self, alpha: f64, other: &SymMat) {
        debug_assert_eq!(self.n, other.n);
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += alpha * y;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.a {
            *x *= s;
        }
    }

    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.a[i * n + j] + self.a[j * n + i]);
                self.a[i * n + j] = v;
                self.a[j * n + i] = v;
            }
        }
    }

    /// C = A * B (general dense product, result not assumed symmetric).
    pub fn matmul(&self, other: &SymMat) -> SymMat {
        let n = self.n;
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                let row = &other.a[k * n..(k + 1) * n];
                let dst = &mut out.a[i * n..(i + 1) * n];
                for j in 0..n {
                    dst[j] += aik * row[j];
                }
            }
        }
        out
    }

    /// Congruence transform W * A * W for symmetric W and A.
    pub fn congruence(&self, w: &SymMat) -> SymMat {
        let mut t = w.matmul(self).matmul(w);
        t.symmetrize();
        t
    }

    /// Lower Cholesky factor; None if the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let mut l = self.a.clone();
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        // zero the strict upper triangle
        for i in 0..n {
            for j in (i + 1)..n {
                l[i * n + j] = 0.0;
            }
        }
        Some(l)
    }

    /// Eigendecomposition by cyclic Jacobi; returns ascending eigenvalues and
    /// column-major eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut a = self.a.clone();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let scale = self.max_abs().max(1.0);
        for _sweep in 0..100 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[p * n + q].abs());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= 1e-18 * scale {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for j in 0..n {
                        let ap = a[p * n + j];
                        let aq = a[q * n + j];
                        a[p * n + j] = c * ap - s * aq;
                        a[q * n + j] = s * ap + c * aq;
                    }
                    for i in 0..n {
                        let ap = a[i * n + p];
                        let aq = a[i * n + q];
                        a[i * n + p] = c * ap - s * aq;
                        a[i * n + q] = s * ap + c * aq;
                        let vp = v[i * n + p];
                        let vq = v[i * n + q];
                        v[i * n + p] = c * vp - s * vq;
                        v[i * n + q] = s * vp + c * vq;
                    }
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
        let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
        let mut vecs = vec![0.0; n * n];
        for (newcol, &oldcol) in order.iter().enumerate() {
            for i in 0..n {
                vecs[newcol * n + i] = v[i * n + oldcol];
            }
        }
        (vals, vecs)
    }

    /// U f(diag) U^T from a spectral map applied to the eigenvalues.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let n = self.n;
        let (vals, vecs) = self.eigh();
        let mut out = SymMat::zeros(n);
        for k in 0..n {
            let fv = f(vals[k]);
            if fv == 0.0 {
                continue;
            }
            let col = &vecs[k * n..(k + 1) * n];
            for i in 0..n {
                let ci = fv * col[i];
                for j in i..n {
                    out.a[i * n + j] += ci * col[j];
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                out.a[j * n + i] = out.a[i * n + j];
            }
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().0.first().copied().unwrap_or(0.0)
    }
}

/// Solve L y = b in place for lower-triangular L (row-major n x n).
pub fn forward_subst(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve L^T y = b in place for lower-triangular L.
pub fn backward_subst(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Largest step t such that X + t * D stays positive semidefinite, given the
/// Cholesky factor of X. Returns f64::INFINITY when D has no negative
/// curvature in the metric of X.
pub fn max_psd_step(x_chol: &[f64], d: &SymMat) -> f64 {
    let n = d.n;
    // M = L^{-1} D L^{-T}; step bound is -1/lambda_min(M) when lambda_min < 0
    let mut m = d.clone();
    // columns: solve L * col = d_col, i.e. apply forward substitution to columns
    // first: L^{-1} D  (operate on each column of D)
    let mut tmp = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            tmp[i] = m.a[i * n + j];
        }
        forward_subst(x_chol, n, &mut tmp);
        for i in 0..n {
            m.a[i * n + j] = tmp[i];
        }
    }
    // then: (L^{-1} D) L^{-T} = (L^{-1} (L^{-1} D)^T)^T applied rowwise
    for i in 0..n {
        for j in 0..n {
            tmp[j] = m.a[i * n + j];
        }
        forward_subst(x_chol, n, &mut tmp);
        for j in 0..n {
            m.a[i * n + j] = tmp[j];
        }
    }
    m.symmetrize();
    let lo = m.min_eigenvalue();
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_round_trip() {
        let mut m = SymMat::identity(3);
        m.set_sym(0, 1, 0.5);
        m.set_sym(1, 2, -0.3);
        m.set_sym(0, 0, 2.0);
        let l = m.cholesky().unwrap();
        let n = 3;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += l[i * n + k] * l[j * n + k];
                }
                assert!((s - m.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eigh_recovers_spectrum() {
        let mut m = SymMat::zeros(2);
        m.set_sym(0, 0, 1.0);
        m.set_sym(1, 1, 3.0);
        m.set_sym(0, 1, 1.0);
        let (vals, _) = m.eigh();
        let s2 = std::f64::consts::SQRT_2;
        assert!((vals[0] - (2.0 - s2)).abs() < 1e-13);
        assert!((vals[1] - (2.0 + s2)).abs() < 1e-13);
    }

    #[test]
    fn spectral_sqrt_squares_back() {
        let mut m = SymMat::zeros(3);
        m.set_sym(0, 0, 4.0);
        m.set_sym(1, 1, 2.0);
        m.set_sym(2, 2, 1.0);
        m.set_sym(0, 1, 0.7);
        m.set_sym(1, 2, -0.2);
        let r = m.spectral_map(|v| v.max(0.0).sqrt());
        let sq = r.matmul(&r);
        for i in 0..3 {
            for j in 0..3 {
                assert!((sq.get(i, j) - m.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn psd_step_bound() {
        let x = SymMat::identity(2);
        let l = x.cholesky().unwrap();
        let mut d = SymMat::zeros(2);
        d.set_sym(0, 0, -2.0);
        d.set_sym(1, 1, 1.0);
        let t = max_psd_step(&l, &d);
        assert!((t - 0.5).abs() < 1e-12);
    }
}
