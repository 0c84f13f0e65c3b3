//! The quantum switch and its outcome statistics.
//!
//! Builds the switch process matrix on the ordered six-qubit space
//! `A_I (x) A_O (x) B_I (x) B_O (x) C_t (x) C_c`, the measure-and-reprepare
//! instruments of the two inner parties and the final party's projective
//! measurements, and evaluates outcome probabilities with the generalized
//! Born rule. A direct circuit-level simulation of the same experiment acts
//! as an independent oracle for every table produced here.

use num_complex::Complex;
use qmat::{C64, ComplexMatrix, TensorSpace, kron, projector};
use thiserror::Error;

mod oracle;
mod process;
mod table;

pub use oracle::{circuit_oracle_probabilities, definite_order_probabilities};
pub use process::{
    ProcessMatrix, apply_control_dephasing, build_separable_reference, build_switch,
    switch_branch,
};
pub use table::ProbabilityTable;

/// Canonical subsystem labels, in index order (first = most significant).
pub const LABELS: [&str; 6] = ["A_I", "A_O", "B_I", "B_O", "C_t", "C_c"];

/// Number of joint outcomes per setting triple: 2 * 2 * 4.
pub const N_OUTCOMES: usize = 16;

#[derive(Debug, Error)]
pub enum SwitchError {
    #[error("visibility must lie in [0, 1], got {0}")]
    VisibilityRange(f64),
    #[error("mixing weight must lie in [0, 1], got {0}")]
    WeightRange(f64),
    #[error("probability table normalization failed at setting (x={x}, y={y}, z={z}): total = {total}")]
    Normalization { x: usize, y: usize, z: usize, total: f64 },
    #[error("negative probability {value} at (x={x}, y={y}, z={z}, a={a}, b={b}, c={c})")]
    NegativeProbability { x: usize, y: usize, z: usize, a: usize, b: usize, c: usize, value: f64 },
    #[error("process matrix violates its invariants: {0}")]
    InvalidProcess(String),
    #[error("instrument set violates completeness: {0}")]
    InvalidInstrument(String),
    #[error("matrix error: {0}")]
    Matrix(#[from] qmat::QmatError),
    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, SwitchError>;

pub fn canonical_space() -> TensorSpace {
    TensorSpace::qubits(&LABELS).expect("canonical labels are distinct")
}

pub(crate) fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub(crate) fn ket(which: Basis, outcome: usize) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match (which, outcome) {
        (Basis::Z, 0) => vec![c(1.0), c(0.0)],
        (Basis::Z, 1) => vec![c(0.0), c(1.0)],
        (Basis::X, 0) => vec![c(s), c(s)],
        (Basis::X, 1) => vec![c(s), c(-s)],
        _ => unreachable!("qubit outcome"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Basis {
    Z,
    X,
}

impl Basis {
    pub(crate) fn from_setting(setting: usize) -> Basis {
        if setting == 0 { Basis::Z } else { Basis::X }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

/// The Choi operators of one party's instruments: `(outcome, setting)` keys.
#[derive(Clone, Debug)]
pub struct InstrumentSet {
    party: Party,
    elements: Vec<((usize, usize), ComplexMatrix)>,
}

impl InstrumentSet {
    pub fn party(&self) -> Party {
        self.party
    }

    pub fn element(&self, outcome: usize, setting: usize) -> &ComplexMatrix {
        &self
            .elements
            .iter()
            .find(|((o, s), _)| *o == outcome && *s == setting)
            .expect("outcome/setting in range")
            .1
    }

    pub fn outcomes(&self) -> usize {
        match self.party {
            Party::Alice | Party::Bob => 2,
            Party::Charlie => 4,
        }
    }

    pub fn settings(&self) -> usize {
        2
    }

    fn validate(&self) -> Result<()> {
        for ((o, s), m) in &self.elements {
            if !qmat::is_psd(m, 1e-9)? {
                return Err(SwitchError::InvalidInstrument(format!(
                    "element ({o}|{s}) of {:?} is not PSD",
                    self.party
                )));
            }
        }
        let space = TensorSpace::qubits(&["in", "out"]).unwrap();
        for s in 0..self.settings() {
            let total = (0..self.outcomes()).fold(ComplexMatrix::zeros(4), |acc, o| {
                acc.add(self.element(o, s))
            });
            match self.party {
                Party::Alice | Party::Bob => {
                    // trace-preservation of the summed instrument in the Choi
                    // picture: tracing out the output slot leaves the identity
                    let reduced = qmat::partial_trace(&total, &space, &["in"])?;
                    if reduced.max_abs_diff(&ComplexMatrix::identity(2)) > 1e-9 {
                        return Err(SwitchError::InvalidInstrument(format!(
                            "{:?} setting {s}: summed instrument is not trace preserving",
                            self.party
                        )));
                    }
                }
                Party::Charlie => {
                    if total.max_abs_diff(&ComplexMatrix::identity(4)) > 1e-9 {
                        return Err(SwitchError::InvalidInstrument(format!(
                            "Charlie setting {s}: measurement operators do not sum to the identity"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Measure-and-reprepare and projective instruments of the three parties.
///
/// Alice and Bob measure the target in the Z (setting 0) or X (setting 1)
/// basis and re-prepare the outcome eigenstate, so each Choi element is the
/// product projector |m><m| (x) |m><m|. Charlie measures target and control
/// jointly: setting 0 is Z on the target with X on the control, setting 1 is
/// X on both, with the outcome index packing `c = target + 2 * control`.
pub fn build_instruments(party: Party) -> InstrumentSet {
    let mut elements = Vec::new();
    match party {
        Party::Alice | Party::Bob => {
            for setting in 0..2 {
                for outcome in 0..2 {
                    let state = ket(Basis::from_setting(setting), outcome);
                    let p = projector(&state);
                    let el = kron(&[&p, &p]).expect("two factors");
                    elements.push(((outcome, setting), el));
                }
            }
        }
        Party::Charlie => {
            for setting in 0..2 {
                let target_basis = Basis::from_setting(setting);
                for outcome in 0..4 {
                    let t = outcome % 2;
                    let ctl = outcome / 2;
                    let pt = projector(&ket(target_basis, t));
                    let pc = projector(&ket(Basis::X, ctl));
                    elements.push(((outcome, setting), kron(&[&pt, &pc]).expect("two factors")));
                }
            }
        }
    }
    let set = InstrumentSet { party, elements };
    set.validate().expect("built-in instruments satisfy completeness");
    set
}

/// Outcome probabilities p(abc|xyz) = Tr[(A_{a|x} (x) B_{b|y} (x) M_{c|z}) W].
pub fn born_probabilities(
    process: &ProcessMatrix,
    alice: &InstrumentSet,
    bob: &InstrumentSet,
    charlie: &InstrumentSet,
) -> Result<ProbabilityTable> {
    let w = process.matrix();
    let mut values = [0.0f64; 128];
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for cc in 0..4 {
                            let op = kron(&[
                                alice.element(a, x),
                                bob.element(b, y),
                                charlie.element(cc, z),
                            ])?;
                            let p = op.inner(w);
                            debug_assert!(p.im.abs() < 1e-10);
                            values[ProbabilityTable::flat_index(x, y, z, a, b, cc)] = p.re;
                        }
                    }
                }
            }
        }
    }
    ProbabilityTable::from_values(values)
}
