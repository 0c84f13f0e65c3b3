//! Fidelity reporting for tomographically measured instrument elements.

use qmat::{C64, ComplexMatrix, fidelity_with_pure};
use switch::{InstrumentSet, Party};

use crate::{ExpError, Result};

/// Fidelities of four measured (trace-normalized) instrument states against
/// the normalized ideal elements, ordered (0|0), (0|1), (1|0), (1|1).
pub fn fidelity_report(measured: &[ComplexMatrix], ideal: &InstrumentSet) -> Result<Vec<f64>> {
    if ideal.party() != Party::Alice {
        return Err(ExpError::Fidelity("ideal elements must be Alice's".into()));
    }
    if measured.len() != 4 {
        return Err(ExpError::Fidelity(format!(
            "expected 4 measured states, got {}",
            measured.len()
        )));
    }
    let order = [(0usize, 0usize), (0, 1), (1, 0), (1, 1)];
    let mut out = Vec::with_capacity(4);
    for (rho, &(a, x)) in measured.iter().zip(order.iter()) {
        let el = ideal.element(a, x);
        let tr = el.trace().re;
        let target = el.scale(C64::new(1.0 / tr, 0.0));
        let f = fidelity_with_pure(&target, rho)
            .map_err(|e| ExpError::Fidelity(format!("state ({a}|{x}): {e}")))?;
        out.push(f);
    }
    Ok(out)
}

/// JSON layout for measured states: {"states": [ [[ [re, im]; 4 ]; 4 ]; 4 ]}.
pub fn read_measured_states(text: &str) -> Result<Vec<ComplexMatrix>> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ExpError::Fidelity(e.to_string()))?;
    let states = v
        .get("states")
        .and_then(serde_json::Value::as_array)
        .ok_or_else(|| ExpError::Fidelity("missing `states` array".into()))?;
    states
        .iter()
        .enumerate()
        .map(|(k, st)| {
            let mut m = ComplexMatrix::zeros(4);
            for i in 0..4 {
                for j in 0..4 {
                    let cell = st
                        .get(i)
                        .and_then(|r| r.get(j))
                        .ok_or_else(|| ExpError::Fidelity(format!("state {k}: missing entry ({i},{j})")))?;
                    let re = cell.get(0).and_then(serde_json::Value::as_f64);
                    let im = cell.get(1).and_then(serde_json::Value::as_f64);
                    match (re, im) {
                        (Some(re), Some(im)) => m[(i, j)] = C64::new(re, im),
                        _ => {
                            return Err(ExpError::Fidelity(format!(
                                "state {k}: entry ({i},{j}) must be [re, im]"
                            )));
                        }
                    }
                }
            }
            Ok(m)
        })
        .collect()
}

pub fn write_measured_states(states: &[ComplexMatrix]) -> serde_json::Value {
    let arr: Vec<serde_json::Value> = states
        .iter()
        .map(|m| {
            let rows: Vec<Vec<[f64; 2]>> = (0..m.dim())
                .map(|i| (0..m.dim()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect();
            serde_json::json!(rows)
        })
        .collect();
    serde_json::json!({ "states": arr })
}

/// Mix each normalized ideal element with white noise so its fidelity equals
/// the requested value exactly: rho = f P + (1 - f)(I - P)/3.
pub fn synthesize_states_with_fidelities(
    ideal: &InstrumentSet,
    fidelities: &[f64; 4],
) -> Vec<ComplexMatrix> {
    let order = [(0usize, 0usize), (0, 1), (1, 0), (1, 1)];
    order
        .iter()
        .zip(fidelities)
        .map(|(&(a, x), &f)| {
            let el = ideal.element(a, x);
            let p = el.scale(C64::new(1.0 / el.trace().re, 0.0));
            let complement = ComplexMatrix::identity(4).sub(&p);
            p.scale(C64::new(f, 0.0))
                .add(&complement.scale(C64::new((1.0 - f) / 3.0, 0.0)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use switch::build_instruments;

    #[test]
    fn ideal_states_have_unit_fidelity() {
        let alice = build_instruments(Party::Alice);
        let measured: Vec<ComplexMatrix> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(a, x)| {
                let el = alice.element(a, x);
                el.scale(C64::new(1.0 / el.trace().re, 0.0))
            })
            .collect();
        let f = fidelity_report(&measured, &alice).unwrap();
        for v in f {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn synthesized_fidelities_are_exact() {
        let alice = build_instruments(Party::Alice);
        let targets = [0.9989, 0.9991, 0.9991, 0.9990];
        let measured = synthesize_states_with_fidelities(&alice, &targets);
        let f = fidelity_report(&measured, &alice).unwrap();
        for (got, want) in f.iter().zip(&targets) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn depolarized_fidelity_formula() {
        // rho = (1 - eps) P + eps I/4 has fidelity (1 - eps) + eps/4
        let alice = build_instruments(Party::Alice);
        let el = alice.element(0, 0);
        let p = el.scale(C64::new(1.0 / el.trace().re, 0.0));
        let eps = 0.004;
        let rho = p
            .scale(C64::new(1.0 - eps, 0.0))
            .add(&ComplexMatrix::identity(4).scale(C64::new(eps / 4.0, 0.0)));
        let f = fidelity_report(&[rho.clone(), rho.clone(), rho.clone(), rho], &alice);
        // only the first element matches its target; others are orthogonal-ish
        let f = f.unwrap();
        assert!((f[0] - ((1.0 - eps) + eps / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_count_and_unnormalized() {
        let alice = build_instruments(Party::Alice);
        assert!(fidelity_report(&[], &alice).is_err());
        let bad = ComplexMatrix::identity(4); // trace 4, not a density matrix
        let states = vec![bad.clone(), bad.clone(), bad.clone(), bad];
        assert!(fidelity_report(&states, &alice).is_err());
    }

    #[test]
    fn measured_state_json_round_trip() {
        let alice = build_instruments(Party::Alice);
        let states = synthesize_states_with_fidelities(&alice, &[0.9989, 0.9991, 0.9991, 0.9990]);
        let text = serde_json::to_string(&write_measured_states(&states)).unwrap();
        let back = read_measured_states(&text).unwrap();
        for (a, b) in states.iter().zip(&back) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
    }
}
