//! Switch process matrices: the coherent superposition of orders, the two
//! definite-order branches, their convex mixtures, and control dephasing.

use qmat::{C64, ComplexMatrix, TensorSpace, kron_vec, permute_state, projector};

use crate::{LABELS, Result, SwitchError, c, canonical_space, ket, Basis};

/// A process matrix on the canonical six-qubit space: Hermitian, PSD, and
/// normalized to trace d_{A_O} * d_{B_O} = 4.
#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    space: TensorSpace,
    matrix: ComplexMatrix,
}

impl ProcessMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let space = canonical_space();
        if matrix.dim() != space.total_dim() {
            return Err(SwitchError::InvalidProcess(format!(
                "dimension {} != {}",
                matrix.dim(),
                space.total_dim()
            )));
        }
        if !matrix.is_hermitian(1e-12) {
            return Err(SwitchError::InvalidProcess("not Hermitian".into()));
        }
        if !qmat::is_psd(&matrix, 1e-9)? {
            return Err(SwitchError::InvalidProcess("not PSD".into()));
        }
        let tr = matrix.trace().re;
        if (tr - 4.0).abs() > 1e-9 {
            return Err(SwitchError::InvalidProcess(format!("trace {tr} != 4")));
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Unnormalized maximally entangled pair |1>> = sum_i |i>|i> on two qubits.
fn entangled_pair() -> Vec<C64> {
    vec![c(1.0), c(0.0), c(0.0), c(1.0)]
}

/// One definite-order branch vector of the switch, already permuted into the
/// canonical label order.
///
/// `control = 0`: |0>^{A_I} |1>>^{A_O B_I} |1>>^{B_O C_t} |0>^{C_c}
/// `control = 1`: |0>^{B_I} |1>>^{B_O A_I} |1>>^{A_O C_t} |1>^{C_c}
pub(crate) fn branch_vector(control: usize) -> Vec<C64> {
    let pair = entangled_pair();
    let target0 = ket(Basis::Z, 0);
    let ctl = ket(Basis::Z, control);
    let v = kron_vec(&kron_vec(&kron_vec(&target0, &pair), &pair), &ctl);
    if control == 0 {
        // written order already matches [A_I, A_O, B_I, B_O, C_t, C_c]
        v
    } else {
        // written order is [B_I, B_O, A_I, A_O, C_t, C_c]
        let written = TensorSpace::qubits(&["B_I", "B_O", "A_I", "A_O", "C_t", "C_c"]).unwrap();
        permute_state(&v, &written, &LABELS).expect("canonical permutation")
    }
}

/// Process matrix of the switch branch with the control fixed to |control>.
pub fn switch_branch(control: usize) -> ProcessMatrix {
    assert!(control < 2);
    ProcessMatrix::new(projector(&branch_vector(control))).expect("branch invariants")
}

/// The switch on control |+> and target |0>: a rank-1 projector of trace 4.
pub fn build_switch() -> ProcessMatrix {
    let b0 = branch_vector(0);
    let b1 = branch_vector(1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w: Vec<C64> = b0.iter().zip(&b1).map(|(x, y)| (x + y) * s).collect();
    ProcessMatrix::new(projector(&w)).expect("switch invariants")
}

/// Convex mixture q * W^{0-first} + (1-q) * W^{1-first} of the definite-order
/// branches.
pub fn build_separable_reference(q: f64) -> Result<ProcessMatrix> {
    if !(0.0..=1.0).contains(&q) || !q.is_finite() {
        return Err(SwitchError::WeightRange(q));
    }
    let m = switch_branch(0)
        .matrix()
        .scale(c(q))
        .add(&switch_branch(1).matrix().scale(c(1.0 - q)));
    ProcessMatrix::new(m)
}

/// Damp the control-coherence of a process: W_V = V W + (1-V)(W + Z W Z)/2
/// with Z acting on the control slot only. Trace preserving for every V.
pub fn apply_control_dephasing(process: &ProcessMatrix, visibility: f64) -> Result<ProcessMatrix> {
    if !(0.0..=1.0).contains(&visibility) || !visibility.is_finite() {
        return Err(SwitchError::VisibilityRange(visibility));
    }
    let w = process.matrix();
    let dim = w.dim();
    // Z on C_c is diagonal with sign given by the least significant bit
    let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    let mut out = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let zwz = w[(i, j)] * c(sign(i) * sign(j));
            out[(i, j)] = w[(i, j)] * c(visibility) + (w[(i, j)] + zwz) * c((1.0 - visibility) / 2.0);
        }
    }
    ProcessMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical_space;
    use qmat::partial_trace;

    #[test]
    fn switch_is_rank_one_with_trace_four() {
        let w = build_switch();
        assert!((w.matrix().trace().re - 4.0).abs() < 1e-12);
        let vals = qmat::eigvalsh(w.matrix()).unwrap();
        assert!((vals[63] - 4.0).abs() < 1e-10);
        assert!(vals[62].abs() < 1e-10);
        assert!(qmat::is_psd(w.matrix(), 1e-9).unwrap());
    }

    #[test]
    fn branches_have_trace_four() {
        assert!((switch_branch(0).matrix().trace().re - 4.0).abs() < 1e-12);
        assert!((switch_branch(1).matrix().trace().re - 4.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_control_state() {
        // keeping only C_c and normalizing: diagonal 1/2, off-diagonal 1/8
        let w = build_switch();
        let rho = partial_trace(w.matrix(), &canonical_space(), &["C_c"]).unwrap();
        let rho = rho.scale(c(0.25));
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((rho[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!((rho[(0, 1)].re - 0.125).abs() < 1e-12);
        assert!(rho[(0, 1)].im.abs() < 1e-12);
    }

    #[test]
    fn full_dephasing_gives_even_branch_mixture() {
        let w = build_switch();
        let v0 = apply_control_dephasing(&w, 0.0).unwrap();
        let mix = build_separable_reference(0.5).unwrap();
        assert!(v0.matrix().max_abs_diff(mix.matrix()) < 1e-12);
        let v1 = apply_control_dephasing(&w, 1.0).unwrap();
        assert!(v1.matrix().max_abs_diff(w.matrix()) < 1e-14);
    }

    #[test]
    fn dephasing_preserves_trace() {
        let w = build_switch();
        for v in [0.0, 0.25, 0.7, 0.991, 1.0] {
            let wv = apply_control_dephasing(&w, v).unwrap();
            assert!((wv.matrix().trace().re - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let w = build_switch();
        assert!(apply_control_dephasing(&w, 1.5).is_err());
        assert!(apply_control_dephasing(&w, -0.1).is_err());
        assert!(build_separable_reference(2.0).is_err());
    }

    #[test]
    fn switch_symmetric_under_party_swap_with_control_flip() {
        // swapping (A_I,A_O) <-> (B_I,B_O) and applying X on C_c maps the
        // switch onto itself
        let w = build_switch();
        let space = canonical_space();
        let m = w.matrix();
        let perm = ["B_I", "B_O", "A_I", "A_O", "C_t", "C_c"];
        // build the permutation+flip on basis vectors once
        let dim = 64;
        let mut map = vec![0usize; dim];
        for i in 0..dim {
            let mut basis = vec![c(0.0); dim];
            basis[i] = c(1.0);
            let p = qmat::permute_state(&basis, &space, &perm).unwrap();
            let idx = p.iter().position(|v| v.re == 1.0).unwrap();
            map[i] = idx ^ 1; // X on the least significant (control) bit
        }
        let transformed = ComplexMatrix::from_fn(dim, |i, j| m[(map[i], map[j])]);
        assert!(transformed.max_abs_diff(m) < 1e-12);
    }
}
