//! The membership primal: maximize the mixing weight eta such that
//! eta p + (1 - eta)/16 is reproduced by a two-branch causal assemblage.
//!
//! Rows are labeled; probability-matching rows come first so the presolve
//! attributes the (known) linear dependencies of the constraint family to
//! structural rows, whose multipliers the inequality extraction never reads.
//! The implied total-normalization row is not added at all: with it absent,
//! every row with a nonzero right-hand side is a probability row, which
//! pins the dual gauge so that the extracted inequality satisfies
//! S(p_ref) = eta* - 1 automatically.

use num_complex::Complex;
use qmat::{C64, ComplexMatrix, kron};
use sdpcore::{LinearExpr, SdpProblem, SdpSolution};
use switch::{InstrumentSet, N_OUTCOMES, Party, ProbabilityTable};

use crate::assemblage::{Assemblage, CausalOrder};
use crate::{CausalError, Result};

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Pauli matrices indexed 0..4 as I, X, Y, Z.
fn pauli(k: usize) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match k {
        0 => ComplexMatrix::identity(2),
        1 => ComplexMatrix::from_rows(&[vec![z, o], vec![o, z]]).unwrap(),
        2 => ComplexMatrix::from_rows(&[vec![z, -i], vec![i, z]]).unwrap(),
        3 => ComplexMatrix::from_rows(&[vec![o, z], vec![z, -o]]).unwrap(),
        _ => unreachable!(),
    }
}

fn block_name(order: CausalOrder, b: usize, ch: usize, y: usize, z: usize) -> String {
    format!("w_{}[b{}c{}y{}z{}]", order.tag(), b, ch, y, z)
}

fn prob_label(x: usize, y: usize, z: usize, a: usize, b: usize, ch: usize) -> String {
    format!("p[a{a}b{b}c{ch}|x{x}y{y}z{z}]")
}

/// Parse a probability-row label back into (x, y, z, a, b, c).
pub(crate) fn parse_prob_label(label: &str) -> Option<(usize, usize, usize, usize, usize, usize)> {
    let inner = label.strip_prefix("p[")?.strip_suffix(']')?;
    let (outs, ins) = inner.split_once('|')?;
    let get = |s: &str, tag: char| -> Option<usize> {
        let pos = s.find(tag)?;
        s[pos + 1..pos + 2].parse().ok()
    };
    Some((
        get(ins, 'x')?,
        get(ins, 'y')?,
        get(ins, 'z')?,
        get(outs, 'a')?,
        get(outs, 'b')?,
        get(outs, 'c')?,
    ))
}

/// The 16 Hermitian basis components used to impose a matrix equality as
/// scalar rows: 4 diagonal, 6 real off-diagonal, 6 imaginary off-diagonal.
fn hermitian_components() -> Vec<(usize, usize, C64)> {
    let mut comps = Vec::with_capacity(16);
    for i in 0..4 {
        comps.push((i, i, c(1.0)));
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            comps.push((i, j, c(1.0)));
        }
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            comps.push((i, j, C64::new(0.0, 1.0)));
        }
    }
    comps
}

/// Per-setting renormalization to machine precision, so that the implied
/// normalization rows are exact linear combinations and get dropped by the
/// presolve rather than lingering as near-dependencies.
fn renormalized(p: &ProbabilityTable) -> [f64; 128] {
    let mut values = *p.values();
    for s in 0..8 {
        let total: f64 = values[s * 16..(s + 1) * 16].iter().sum();
        for v in &mut values[s * 16..(s + 1) * 16] {
            *v /= total;
        }
    }
    values
}

pub fn build_primal(p: &ProbabilityTable, alice: &InstrumentSet) -> Result<SdpProblem> {
    build_primal_inner(p, alice, None)
}

/// Same primal with an extra slack row bounding eta above; used to pull an
/// explicit causal model for the table itself out of a feasible instance.
pub fn build_primal_capped(
    p: &ProbabilityTable,
    alice: &InstrumentSet,
    cap: f64,
) -> Result<SdpProblem> {
    build_primal_inner(p, alice, Some(cap))
}

fn build_primal_inner(
    p: &ProbabilityTable,
    alice: &InstrumentSet,
    cap: Option<f64>,
) -> Result<SdpProblem> {
    if alice.party() != Party::Alice {
        return Err(CausalError::Invalid(
            "the characterized instruments must be Alice's".into(),
        ));
    }
    let pv = renormalized(p);
    let mut prob = SdpProblem::new();
    let eta = prob.add_free_scalar("eta");
    let mut obj = LinearExpr::default();
    obj.add_scalar(eta, 1.0);
    prob.objective = obj;

    let mut blocks = std::collections::HashMap::new();
    for order in [CausalOrder::AliceFirst, CausalOrder::BobFirst] {
        for (b, ch, y, z) in Assemblage::keys() {
            let idx = prob.add_block(&block_name(order, b, ch, y, z), 4);
            blocks.insert((order, b, ch, y, z), idx);
        }
    }
    let blk = |order: CausalOrder, b: usize, ch: usize, y: usize, z: usize| -> usize {
        blocks[&(order, b, ch, y, z)]
    };

    // probability-matching rows (first, so the presolve keeps all of them):
    //   <A_{a|x}, w_af + w_bf> + eta (1/16 - p) = 1/16
    for (x, y, z) in ProbabilityTable::setting_triples() {
        for (a, b, ch) in ProbabilityTable::outcome_triples() {
            let mut e = LinearExpr::default();
            e.add_block_matrix(blk(CausalOrder::AliceFirst, b, ch, y, z), alice.element(a, x), 1.0);
            e.add_block_matrix(blk(CausalOrder::BobFirst, b, ch, y, z), alice.element(a, x), 1.0);
            let p_r = pv[ProbabilityTable::flat_index(x, y, z, a, b, ch)];
            e.add_scalar(eta, 1.0 / N_OUTCOMES as f64 - p_r);
            prob.add_constraint(&prob_label(x, y, z, a, b, ch), e, 1.0 / N_OUTCOMES as f64);
        }
    }

    let comps = hermitian_components();

    // alice-first branch: sum_c w_{bc|y0} = sum_c w_{bc|y1}
    for b in 0..2 {
        for y in 0..2 {
            for (k, &(i, j, coef)) in comps.iter().enumerate() {
                let mut e = LinearExpr::default();
                for ch in 0..4 {
                    e.add_block_entry(blk(CausalOrder::AliceFirst, b, ch, y, 0), i, j, coef);
                    e.add_block_entry(blk(CausalOrder::AliceFirst, b, ch, y, 1), i, j, -coef);
                }
                prob.add_constraint(&format!("af_zind[b{b}y{y}k{k}]"), e, 0.0);
            }
        }
    }
    // alice-first: full marginal equal at (0,0) and (1,0); z-equality follows
    for (k, &(i, j, coef)) in comps.iter().enumerate() {
        let mut e = LinearExpr::default();
        for b in 0..2 {
            for ch in 0..4 {
                e.add_block_entry(blk(CausalOrder::AliceFirst, b, ch, 0, 0), i, j, coef);
                e.add_block_entry(blk(CausalOrder::AliceFirst, b, ch, 1, 0), i, j, -coef);
            }
        }
        prob.add_constraint(&format!("af_yind[k{k}]"), e, 0.0);
    }
    // alice-first: reduced form of the marginal at (0,0): the component of
    // the marginal along every Pauli product with a nontrivial output factor
    // vanishes
    for pi in 0..4 {
        for pj in 1..4 {
            let pp = kron(&[&pauli(pi), &pauli(pj)])?;
            let mut e = LinearExpr::default();
            for b in 0..2 {
                for ch in 0..4 {
                    e.add_block_matrix(blk(CausalOrder::AliceFirst, b, ch, 0, 0), &pp, 1.0);
                }
            }
            prob.add_constraint(&format!("af_reduced[i{pi}j{pj}]"), e, 0.0);
        }
    }

    // bob-first branch: sum_c w_{bc|y0} = sum_c w_{bc|y1}
    for b in 0..2 {
        for y in 0..2 {
            for (k, &(i, j, coef)) in comps.iter().enumerate() {
                let mut e = LinearExpr::default();
                for ch in 0..4 {
                    e.add_block_entry(blk(CausalOrder::BobFirst, b, ch, y, 0), i, j, coef);
                    e.add_block_entry(blk(CausalOrder::BobFirst, b, ch, y, 1), i, j, -coef);
                }
                prob.add_constraint(&format!("bf_zind[b{b}y{y}k{k}]"), e, 0.0);
            }
        }
    }
    // bob-first: per-b reduced form at z = 0 (z = 1 follows from z-independence)
    for b in 0..2 {
        for y in 0..2 {
            for pi in 0..4 {
                for pj in 1..4 {
                    let pp = kron(&[&pauli(pi), &pauli(pj)])?;
                    let mut e = LinearExpr::default();
                    for ch in 0..4 {
                        e.add_block_matrix(blk(CausalOrder::BobFirst, b, ch, y, 0), &pp, 1.0);
                    }
                    prob.add_constraint(&format!("bf_reduced[b{b}y{y}i{pi}j{pj}]"), e, 0.0);
                }
            }
        }
    }

    if let Some(cap) = cap {
        let slack = prob.add_block("eta_cap_slack", 1);
        let mut e = LinearExpr::default();
        e.add_scalar(eta, 1.0);
        e.add_block_entry(slack, 0, 0, c(1.0));
        prob.add_constraint("eta_cap", e, cap);
    }

    Ok(prob)
}

/// Result of solving the membership primal.
#[derive(Clone, Debug)]
pub struct PrimalOutcome {
    pub eta_star: f64,
    /// the two-branch causal model read off the solved blocks; it reproduces
    /// the remixed table at eta*
    pub model: Option<(Assemblage, Assemblage)>,
    pub solution: SdpSolution,
}

pub fn solve_primal(problem: &SdpProblem) -> Result<PrimalOutcome> {
    let solution = sdpcore::solve(problem, crate::SOLVE_TOL)?;
    if solution.status != sdpcore::SolveStatus::Optimal {
        return Err(CausalError::SolverStatus {
            status: solution.status.to_string(),
            message: solution.note.clone().unwrap_or_default(),
        });
    }
    primal_outcome(problem, solution)
}

pub(crate) fn primal_outcome(problem: &SdpProblem, solution: SdpSolution) -> Result<PrimalOutcome> {
    let eta_idx = problem
        .scalar_named("eta")
        .ok_or_else(|| CausalError::UnexpectedProblem("no `eta` scalar".into()))?;
    let eta_star = solution.scalars[eta_idx];
    let mut model = None;
    if problem.block_named(&block_name(CausalOrder::AliceFirst, 0, 0, 0, 0)).is_some() {
        let collect = |order: CausalOrder| -> Result<Assemblage> {
            let ops: Result<Vec<ComplexMatrix>> = Assemblage::keys()
                .map(|(b, ch, y, z)| {
                    let idx = problem
                        .block_named(&block_name(order, b, ch, y, z))
                        .ok_or_else(|| {
                            CausalError::UnexpectedProblem(format!(
                                "missing block {}",
                                block_name(order, b, ch, y, z)
                            ))
                        })?;
                    Ok(solution.primal_blocks[idx].clone())
                })
                .collect();
            Ok(Assemblage::new(order, ops?))
        };
        model = Some((collect(CausalOrder::AliceFirst)?, collect(CausalOrder::BobFirst)?));
    }
    Ok(PrimalOutcome { eta_star, model, solution })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_round_trip() {
        let label = prob_label(1, 0, 1, 0, 1, 3);
        assert_eq!(parse_prob_label(&label), Some((1, 0, 1, 0, 1, 3)));
        assert_eq!(parse_prob_label("af_zind[b0y1k3]"), None);
    }

    #[test]
    fn primal_shape() {
        let alice = switch::build_instruments(Party::Alice);
        let p = ProbabilityTable::uniform();
        let prob = build_primal(&p, &alice).unwrap();
        assert_eq!(prob.blocks.len(), 64);
        // 128 probability rows + 64+16+12 alice-first + 64+48 bob-first
        assert_eq!(prob.num_constraints(), 128 + 64 + 16 + 12 + 64 + 48);
        assert!(!prob.is_real()); // imaginary basis components are present
    }
}
