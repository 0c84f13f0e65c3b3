//! Causal assemblages: the conditional operators on Alice's input/output
//! space carrying everything the uncharacterized parties can do in a fixed
//! causal order, and the full constraint re-check performed outside the
//! solver.

use qmat::{C64, ComplexMatrix, TensorSpace};
use switch::{InstrumentSet, ProbabilityTable};

/// Which party acts first in the fixed-order branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CausalOrder {
    AliceFirst,
    BobFirst,
}

impl CausalOrder {
    pub fn tag(&self) -> &'static str {
        match self {
            CausalOrder::AliceFirst => "af",
            CausalOrder::BobFirst => "bf",
        }
    }
}

/// Subnormalized branch assemblage: operators w_{bc|yz} on A_I (x) A_O with
/// the branch weight absorbed (the weight is trace(sum_bc w_{bc|yz}) / 2).
#[derive(Clone, Debug)]
pub struct Assemblage {
    pub order: CausalOrder,
    operators: Vec<ComplexMatrix>, // indexed by flat (b, c, y, z)
}

impl Assemblage {
    pub fn flat_index(b: usize, c: usize, y: usize, z: usize) -> usize {
        debug_assert!(b < 2 && c < 4 && y < 2 && z < 2);
        ((b * 4 + c) * 2 + y) * 2 + z
    }

    pub fn keys() -> impl Iterator<Item = (usize, usize, usize, usize)> {
        (0..32).map(|k| (k >> 4 & 1, k >> 2 & 3, k >> 1 & 1, k & 1))
    }

    pub fn new(order: CausalOrder, operators: Vec<ComplexMatrix>) -> Self {
        assert_eq!(operators.len(), 32);
        assert!(operators.iter().all(|m| m.dim() == 4));
        Self { order, operators }
    }

    pub fn operator(&self, b: usize, c: usize, y: usize, z: usize) -> &ComplexMatrix {
        &self.operators[Self::flat_index(b, c, y, z)]
    }

    /// Branch weight: trace of the full marginal over d_{A_O}.
    pub fn weight(&self) -> f64 {
        let m = self.marginal_bc(0, 0);
        m.trace().re / 2.0
    }

    /// sum_bc w_{bc|yz}
    pub fn marginal_bc(&self, y: usize, z: usize) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(4);
        for b in 0..2 {
            for c in 0..4 {
                acc = acc.add(self.operator(b, c, y, z));
            }
        }
        acc
    }

    /// sum_c w_{bc|yz}
    pub fn marginal_c(&self, b: usize, y: usize, z: usize) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(4);
        for c in 0..4 {
            acc = acc.add(self.operator(b, c, y, z));
        }
        acc
    }
}

/// (Tr_{A_O} m) (x) 1/2 on A_I (x) A_O, A_O least significant.
pub(crate) fn reduce_and_pad(m: &ComplexMatrix) -> ComplexMatrix {
    let space = TensorSpace::qubits(&["A_I", "A_O"]).unwrap();
    let t = qmat::partial_trace(m, &space, &["A_I"]).expect("dimension 4");
    let mut out = ComplexMatrix::zeros(4);
    for p in 0..2 {
        for q in 0..2 {
            for r in 0..2 {
                out[(2 * p + r, 2 * q + r)] = t[(p, q)] * C64::new(0.5, 0.0);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct AssemblageCheck {
    pub ok: bool,
    /// worst violation magnitude per named constraint family
    pub violations: Vec<(String, f64)>,
}

impl AssemblageCheck {
    fn push(&mut self, name: &str, magnitude: f64, tol: f64) {
        if magnitude > tol {
            self.ok = false;
        }
        self.violations.push((name.to_string(), magnitude));
    }
}

/// Re-check every defining constraint of a two-branch causal model at the
/// given tolerance, independently of how it was produced.
pub fn check_assemblage_pair(
    alice_first: &Assemblage,
    bob_first: &Assemblage,
    tol: f64,
) -> AssemblageCheck {
    let mut out = AssemblageCheck { ok: true, violations: Vec::new() };
    assert_eq!(alice_first.order, CausalOrder::AliceFirst);
    assert_eq!(bob_first.order, CausalOrder::BobFirst);

    // positivity of every block
    for (name, asm) in [("alice-first", alice_first), ("bob-first", bob_first)] {
        let mut worst = 0.0f64;
        for (b, c, y, z) in Assemblage::keys() {
            let vals = qmat::eigvalsh(asm.operator(b, c, y, z)).expect("hermitian block");
            worst = worst.max(-vals.first().copied().unwrap_or(0.0));
        }
        out.push(&format!("{name}: positivity"), worst.max(0.0), tol);
    }

    // alice-first: z-independence of the b-marginal
    let mut worst = 0.0f64;
    for b in 0..2 {
        for y in 0..2 {
            let d = alice_first
                .marginal_c(b, y, 0)
                .sub(&alice_first.marginal_c(b, y, 1));
            worst = worst.max(d.max_abs());
        }
    }
    out.push("alice-first: b-marginal independent of z", worst, tol);

    // alice-first: full marginal independent of the setting pair
    let m00 = alice_first.marginal_bc(0, 0);
    let mut worst = 0.0f64;
    for (y, z) in [(0, 1), (1, 0), (1, 1)] {
        worst = worst.max(alice_first.marginal_bc(y, z).sub(&m00).max_abs());
    }
    out.push("alice-first: full marginal setting-independent", worst, tol);

    // alice-first: reduced form of the full marginal
    let mut worst = 0.0f64;
    for y in 0..2 {
        for z in 0..2 {
            let m = alice_first.marginal_bc(y, z);
            worst = worst.max(m.sub(&reduce_and_pad(&m)).max_abs());
        }
    }
    out.push("alice-first: marginal equals its reduced form", worst, tol);

    // bob-first: z-independence of the b-marginal
    let mut worst = 0.0f64;
    for b in 0..2 {
        for y in 0..2 {
            let d = bob_first.marginal_c(b, y, 0).sub(&bob_first.marginal_c(b, y, 1));
            worst = worst.max(d.max_abs());
        }
    }
    out.push("bob-first: b-marginal independent of z", worst, tol);

    // bob-first: per-b reduced form
    let mut worst = 0.0f64;
    for b in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                let m = bob_first.marginal_c(b, y, z);
                worst = worst.max(m.sub(&reduce_and_pad(&m)).max_abs());
            }
        }
    }
    out.push("bob-first: b-marginal equals its reduced form", worst, tol);

    // trace conditions: each branch trace setting-independent, total weight 1
    let mut worst = 0.0f64;
    let q_af = alice_first.weight();
    let q_bf = bob_first.weight();
    for y in 0..2 {
        for z in 0..2 {
            worst = worst.max((alice_first.marginal_bc(y, z).trace().re / 2.0 - q_af).abs());
            worst = worst.max((bob_first.marginal_bc(y, z).trace().re / 2.0 - q_bf).abs());
        }
    }
    out.push("branch traces setting-independent", worst, tol);
    out.push("weights sum to one", (q_af + q_bf - 1.0).abs(), tol);
    out.push("weight in range", (-q_af).max(q_af - 1.0).max(0.0), tol);

    out
}

/// The explicit causal model of the uniform table: w = q I/16 per outcome
/// pair, split evenly between the orders.
pub fn uniform_model() -> (Assemblage, Assemblage) {
    let half = |q: f64| {
        (0..32)
            .map(|_| ComplexMatrix::identity(4).scale(C64::new(q / 16.0, 0.0)))
            .collect::<Vec<_>>()
    };
    (
        Assemblage::new(CausalOrder::AliceFirst, half(0.5)),
        Assemblage::new(CausalOrder::BobFirst, half(0.5)),
    )
}

/// Blend two models elementwise: lam * a + (1 - lam) * b.
pub fn blend_models(
    a: &(Assemblage, Assemblage),
    b: &(Assemblage, Assemblage),
    lam: f64,
) -> (Assemblage, Assemblage) {
    let mix = |x: &Assemblage, y: &Assemblage, order: CausalOrder| {
        let ops = Assemblage::keys()
            .map(|(bb, c, yy, z)| {
                x.operator(bb, c, yy, z)
                    .scale(C64::new(lam, 0.0))
                    .add(&y.operator(bb, c, yy, z).scale(C64::new(1.0 - lam, 0.0)))
            })
            .collect();
        Assemblage::new(order, ops)
    };
    (
        mix(&a.0, &b.0, CausalOrder::AliceFirst),
        mix(&a.1, &b.1, CausalOrder::BobFirst),
    )
}

/// Worst residual of Tr(A_{a|x} (w_af + w_bf)) against the table.
pub fn reproduction_residual(
    model: &(Assemblage, Assemblage),
    alice: &InstrumentSet,
    p: &ProbabilityTable,
) -> f64 {
    let mut worst = 0.0f64;
    for (x, y, z) in ProbabilityTable::setting_triples() {
        for (a, b, c) in ProbabilityTable::outcome_triples() {
            let w = model.0.operator(b, c, y, z).add(model.1.operator(b, c, y, z));
            let pr = alice.element(a, x).inner(&w).re;
            worst = worst.max((pr - p.get(x, y, z, a, b, c)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_model() -> (Assemblage, Assemblage) {
        // w = q * I/16 per (b,c) reproduces the uniform table
        let half = |q: f64| {
            (0..32)
                .map(|_| ComplexMatrix::identity(4).scale(C64::new(q / 16.0, 0.0)))
                .collect::<Vec<_>>()
        };
        (
            Assemblage::new(CausalOrder::AliceFirst, half(0.5)),
            Assemblage::new(CausalOrder::BobFirst, half(0.5)),
        )
    }

    #[test]
    fn uniform_model_passes_all_constraints() {
        let (af, bf) = uniform_model();
        let check = check_assemblage_pair(&af, &bf, 1e-12);
        assert!(check.ok, "{:?}", check.violations);
        assert!((af.weight() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_model_reproduces_uniform_table() {
        let model = uniform_model();
        let alice = switch::build_instruments(switch::Party::Alice);
        let r = reproduction_residual(&model, &alice, &ProbabilityTable::uniform());
        assert!(r < 1e-14, "residual {r}");
    }

    #[test]
    fn broken_positivity_is_flagged() {
        let (mut af, bf) = uniform_model();
        let ops: Vec<ComplexMatrix> = (0..32)
            .map(|k| {
                if k == 0 {
                    ComplexMatrix::diag(&[-0.1, 0.1, 0.03125, 0.03125])
                } else {
                    af.operator(k >> 4 & 1, k >> 2 & 3, k >> 1 & 1, k & 1).clone()
                }
            })
            .collect();
        af = Assemblage::new(CausalOrder::AliceFirst, ops);
        let check = check_assemblage_pair(&af, &bf, 1e-9);
        assert!(!check.ok);
    }

    #[test]
    fn reduce_and_pad_identity_case() {
        let m = ComplexMatrix::identity(4).scale(C64::new(0.25, 0.0));
        assert!(reduce_and_pad(&m).max_abs_diff(&m) < 1e-15);
    }
}
