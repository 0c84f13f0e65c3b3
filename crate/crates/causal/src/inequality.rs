//! Tailored causal inequalities S = sum alpha p >= 0 read off the dual
//! multipliers of the probability-matching rows.

use sha2::{Digest, Sha256};
use sdpcore::{SdpProblem, SdpSolution};
use switch::{N_OUTCOMES, ProbabilityTable};

use crate::primal::parse_prob_label;
use crate::{CausalError, Result};

/// Coefficients of a causal inequality, together with the table it was
/// tailored to. Violation (S < 0) certifies indefinite causal order for any
/// experiment implementing the characterized instruments.
#[derive(Clone, Debug)]
pub struct InequalityCoefficients {
    alpha: [f64; 128],
    pub n_outcomes: usize,
    /// value of S on the reference table at extraction time
    pub s_ref: Option<f64>,
    /// the reference table itself (hashed in the serialized form)
    pub p_ref: Option<ProbabilityTable>,
}

impl InequalityCoefficients {
    pub fn new(alpha: [f64; 128]) -> Self {
        Self { alpha, n_outcomes: N_OUTCOMES, s_ref: None, p_ref: None }
    }

    pub fn zero() -> Self {
        Self::new([0.0; 128])
    }

    pub fn get(&self, x: usize, y: usize, z: usize, a: usize, b: usize, c: usize) -> f64 {
        self.alpha[ProbabilityTable::flat_index(x, y, z, a, b, c)]
    }

    pub fn values(&self) -> &[f64; 128] {
        &self.alpha
    }

    /// A copy with one coefficient shifted by `delta`.
    pub fn perturbed(&self, x: usize, y: usize, z: usize, a: usize, b: usize, c: usize, delta: f64) -> Self {
        let mut alpha = self.alpha;
        alpha[ProbabilityTable::flat_index(x, y, z, a, b, c)] += delta;
        Self { alpha, n_outcomes: self.n_outcomes, s_ref: None, p_ref: self.p_ref.clone() }
    }

    /// Defect of the dual normalization (1/N_O) sum alpha = 1 + sum alpha p.
    pub fn normalization_defect(&self, p_ref: &ProbabilityTable) -> f64 {
        let total: f64 = self.alpha.iter().sum();
        let s: f64 = evaluate_s(self, p_ref);
        total / self.n_outcomes as f64 - 1.0 - s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut coeffs = Vec::with_capacity(128);
        for (x, y, z) in ProbabilityTable::setting_triples() {
            for (a, b, c) in ProbabilityTable::outcome_triples() {
                coeffs.push(serde_json::json!({
                    "x": x, "y": y, "z": z, "a": a, "b": b, "c": c,
                    "alpha": self.get(x, y, z, a, b, c),
                }));
            }
        }
        serde_json::json!({
            "n_outcomes": self.n_outcomes,
            "s_ref": self.s_ref,
            "p_ref_hash": self.p_ref.as_ref().map(table_hash),
            "coefficients": coeffs,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let n_outcomes = v
            .get("n_outcomes")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| CausalError::Invalid("missing n_outcomes".into()))? as usize;
        if n_outcomes != N_OUTCOMES {
            return Err(CausalError::Invalid(format!(
                "unsupported outcome count {n_outcomes}"
            )));
        }
        let coeffs = v
            .get("coefficients")
            .and_then(serde_json::Value::as_array)
            .ok_or_else(|| CausalError::Invalid("missing coefficients array".into()))?;
        let mut alpha = [f64::NAN; 128];
        for rec in coeffs {
            let g = |k: &str| -> Result<usize> {
                rec.get(k)
                    .and_then(serde_json::Value::as_u64)
                    .map(|v| v as usize)
                    .ok_or_else(|| CausalError::Invalid(format!("coefficient record missing `{k}`")))
            };
            let val = rec
                .get("alpha")
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| CausalError::Invalid("coefficient record missing `alpha`".into()))?;
            alpha[ProbabilityTable::flat_index(g("x")?, g("y")?, g("z")?, g("a")?, g("b")?, g("c")?)] =
                val;
        }
        if alpha.iter().any(|v| v.is_nan()) {
            return Err(CausalError::Invalid("incomplete coefficient set".into()));
        }
        let mut out = Self::new(alpha);
        out.s_ref = v.get("s_ref").and_then(serde_json::Value::as_f64);
        Ok(out)
    }
}

/// SHA-256 of the canonical JSON serialization of a table.
pub fn table_hash(p: &ProbabilityTable) -> String {
    let text = serde_json::to_string(&p.to_json()).expect("table serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// S = sum alpha p; linear in the table.
pub fn evaluate_s(alpha: &InequalityCoefficients, p: &ProbabilityTable) -> f64 {
    alpha
        .values()
        .iter()
        .zip(p.values())
        .map(|(a, v)| a * v)
        .sum()
}

/// Read the tailored inequality off the dual multipliers of the solved
/// membership primal. The sign is fixed so that S(p_ref) = eta* - 1, and the
/// dual normalization is verified (never repaired).
pub fn extract_inequality(
    problem: &SdpProblem,
    solution: &SdpSolution,
) -> Result<InequalityCoefficients> {
    if solution.dual_multipliers.len() != problem.num_constraints() {
        return Err(CausalError::MissingDuals(format!(
            "{} multipliers for {} constraints",
            solution.dual_multipliers.len(),
            problem.num_constraints()
        )));
    }
    let eta_idx = problem
        .scalar_named("eta")
        .ok_or_else(|| CausalError::UnexpectedProblem("no `eta` scalar".into()))?;
    let eta_star = solution.scalars[eta_idx];

    let mut alpha = [f64::NAN; 128];
    let mut p_ref = [f64::NAN; 128];
    for (i, con) in problem.constraints.iter().enumerate() {
        let Some((x, y, z, a, b, c)) = parse_prob_label(&con.label) else {
            continue;
        };
        let idx = ProbabilityTable::flat_index(x, y, z, a, b, c);
        alpha[idx] = solution.dual_multipliers[i];
        // the eta coefficient of the row is 1/N_O - p
        let coef = con
            .expr
            .scalars
            .iter()
            .find(|(s, _)| *s == eta_idx)
            .map(|(_, c)| *c)
            .unwrap_or(0.0);
        p_ref[idx] = 1.0 / N_OUTCOMES as f64 - coef;
    }
    if alpha.iter().any(|v| v.is_nan()) {
        return Err(CausalError::MissingDuals(
            "problem lacks a complete set of probability rows".into(),
        ));
    }
    let p_ref = ProbabilityTable::from_values(p_ref)?;

    let mut ineq = InequalityCoefficients::new(alpha);
    let s_plus = evaluate_s(&ineq, &p_ref);
    if (-s_plus - (eta_star - 1.0)).abs() < (s_plus - (eta_star - 1.0)).abs() {
        for v in ineq.alpha.iter_mut() {
            *v = -*v;
        }
    }
    let defect = ineq.normalization_defect(&p_ref);
    const NORMALIZATION_TOL: f64 = 1e-6;
    if defect.abs() > NORMALIZATION_TOL {
        return Err(CausalError::Normalization { defect, tol: NORMALIZATION_TOL });
    }
    ineq.s_ref = Some(evaluate_s(&ineq, &p_ref));
    ineq.p_ref = Some(p_ref);
    Ok(ineq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_alpha_evaluates_to_zero() {
        let alpha = InequalityCoefficients::zero();
        assert_eq!(evaluate_s(&alpha, &ProbabilityTable::uniform()), 0.0);
    }

    #[test]
    fn s_is_linear_in_the_table() {
        let mut raw = [0.0f64; 128];
        for (i, v) in raw.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        let alpha = InequalityCoefficients::new(raw);
        let t1 = switch::circuit_oracle_probabilities(1.0).unwrap();
        let t2 = ProbabilityTable::uniform();
        for lam in [0.0, 0.3, 0.77, 1.0] {
            let mixed = t1.mix(&t2, lam).unwrap();
            let lhs = evaluate_s(&alpha, &mixed);
            let rhs = lam * evaluate_s(&alpha, &t1) + (1.0 - lam) * evaluate_s(&alpha, &t2);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let mut raw = [0.0f64; 128];
        for (i, v) in raw.iter_mut().enumerate() {
            *v = i as f64 / 7.0 - 3.0;
        }
        let mut alpha = InequalityCoefficients::new(raw);
        alpha.s_ref = Some(-0.5);
        let v = alpha.to_json();
        let back = InequalityCoefficients::from_json(&v).unwrap();
        for (a, b) in alpha.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.s_ref, Some(-0.5));
    }
}
