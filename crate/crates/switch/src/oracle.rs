//! Independent circuit-level simulation of the switch experiment.
//!
//! Works directly on the two-qubit target (x) control state: for outcomes
//! (a, b) the conditional operator |0><0|_c (x) K_b K_a + |1><1|_c (x) K_a K_b
//! is applied to target |0>, control |+>, control coherence is damped by the
//! visibility, and the final party's projectors are applied. No process
//! matrix or Choi contraction is involved, which makes this an oracle for
//! [`crate::born_probabilities`].

use qmat::{ComplexMatrix, kron, projector};

use crate::{Basis, Party, ProbabilityTable, Result, SwitchError, build_instruments, c, ket};

/// Kraus operator of the measure-and-reprepare outcome: |m><m| with m the
/// basis eigenstate of the setting.
fn kraus(outcome: usize, setting: usize) -> ComplexMatrix {
    projector(&ket(Basis::from_setting(setting), outcome))
}

fn charlie_projectors() -> Vec<((usize, usize), ComplexMatrix)> {
    let charlie = build_instruments(Party::Charlie);
    let mut out = Vec::with_capacity(8);
    for z in 0..2 {
        for cc in 0..4 {
            out.push(((cc, z), charlie.element(cc, z).clone()));
        }
    }
    out
}

fn simulate(visibility: f64, branch_weights: Option<(f64, f64)>) -> Result<ProbabilityTable> {
    if !(0.0..=1.0).contains(&visibility) || !visibility.is_finite() {
        return Err(SwitchError::VisibilityRange(visibility));
    }
    let charlie = charlie_projectors();
    // target (x) control: target is the most significant qubit, matching C_t (x) C_c
    let rho_in = kron(&[
        &projector(&ket(Basis::Z, 0)),
        &projector(&ket(Basis::X, 0)),
    ])?;
    let p0 = projector(&ket(Basis::Z, 0));
    let p1 = projector(&ket(Basis::Z, 1));

    let mut values = [0.0f64; 128];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let ka = kraus(a, x);
                    let kb = kraus(b, y);
                    let first_then = kb.matmul(&ka); // order: a's party acts first
                    let other = ka.matmul(&kb);
                    let rho_out = match branch_weights {
                        None => {
                            let op = kron(&[&first_then, &p0])?.add(&kron(&[&other, &p1])?);
                            let mut out = op.matmul(&rho_in).matmul(&op.dagger());
                            // control dephasing: damp the off-diagonal control
                            // blocks (control is the least significant bit)
                            for i in 0..4 {
                                for j in 0..4 {
                                    if (i % 2) != (j % 2) {
                                        out[(i, j)] *= c(visibility);
                                    }
                                }
                            }
                            out
                        }
                        Some((q0, q1)) => {
                            // classical mixture of the two definite orders,
                            // with the control re-prepared per branch
                            let t0 = first_then
                                .matmul(&projector(&ket(Basis::Z, 0)))
                                .matmul(&first_then.dagger());
                            let t1 = other
                                .matmul(&projector(&ket(Basis::Z, 0)))
                                .matmul(&other.dagger());
                            kron(&[&t0, &p0])?
                                .scale(c(q0))
                                .add(&kron(&[&t1, &p1])?.scale(c(q1)))
                        }
                    };
                    for ((cc, z), m) in &charlie {
                        let p = m.inner(&rho_out);
                        debug_assert!(p.im.abs() < 1e-12);
                        values[ProbabilityTable::flat_index(x, y, *z, a, b, *cc)] = p.re;
                    }
                }
            }
        }
    }
    ProbabilityTable::from_values(values)
}

/// Outcome statistics of the coherent switch with interferometric visibility
/// `v`; `v = 1` is the ideal switch, `v = 0` the fully dephased one.
pub fn circuit_oracle_probabilities(v: f64) -> Result<ProbabilityTable> {
    simulate(v, None)
}

/// Outcome statistics of the classical mixture q * (Alice first) +
/// (1 - q) * (Bob first).
pub fn definite_order_probabilities(q: f64) -> Result<ProbabilityTable> {
    if !(0.0..=1.0).contains(&q) || !q.is_finite() {
        return Err(SwitchError::WeightRange(q));
    }
    simulate(1.0, Some((q, 1.0 - q)))
}
