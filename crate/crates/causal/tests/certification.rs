//! End-to-end certification checks: robustness values, strong duality, the
//! tailored inequality, no false positives on separable references, and
//! certificate verification.

use causal::{
    Verdict, build_primal, build_primal_capped, certify, check_assemblage_pair, evaluate_s,
    extract_inequality, reconstruct_certificate, solve_primal, verify_certificate,
};
use switch::{
    Party, ProbabilityTable, build_instruments, circuit_oracle_probabilities,
    definite_order_probabilities,
};

fn alice() -> switch::InstrumentSet {
    build_instruments(Party::Alice)
}

fn ideal_table() -> ProbabilityTable {
    circuit_oracle_probabilities(1.0).unwrap()
}

#[test]
fn ideal_switch_robustness_and_strong_duality() {
    let p = ideal_table();
    let problem = build_primal(&p, &alice()).unwrap();
    let outcome = solve_primal(&problem).unwrap();
    // independently computed robustness of the ideal switch table
    assert!(
        (outcome.eta_star - 0.9206452722).abs() < 1e-4,
        "eta* = {}",
        outcome.eta_star
    );
    let ineq = extract_inequality(&problem, &outcome.solution).unwrap();
    let s = evaluate_s(&ineq, &p);
    assert!((s - -0.0793547).abs() < 5e-4, "S = {s}");
    // strong duality: eta* = 1 + S to solver accuracy
    assert!((outcome.eta_star - (1.0 + s)).abs() < 1e-5);
    // the uniform table evaluates to eta* through the normalization identity
    let s_unif = evaluate_s(&ineq, &ProbabilityTable::uniform());
    assert!((s_unif - outcome.eta_star).abs() < 1e-5);
}

#[test]
fn remixed_table_sits_on_the_boundary() {
    let p = ideal_table();
    let problem = build_primal(&p, &alice()).unwrap();
    let outcome = solve_primal(&problem).unwrap();
    let ineq = extract_inequality(&problem, &outcome.solution).unwrap();
    let remix = p.mix(&ProbabilityTable::uniform(), outcome.eta_star).unwrap();
    let s_remix = evaluate_s(&ineq, &remix);
    assert!(s_remix.abs() < 1e-6, "S(remix) = {s_remix}");
    // and its own robustness is 1
    let problem2 = build_primal(&remix, &alice()).unwrap();
    let outcome2 = solve_primal(&problem2).unwrap();
    assert!((outcome2.eta_star - 1.0).abs() < 1e-6, "eta*(remix) = {}", outcome2.eta_star);
}

#[test]
fn separable_references_admit_models() {
    let a = alice();
    for q in [0.0, 0.5, 1.0] {
        let p = definite_order_probabilities(q).unwrap();
        let problem = build_primal(&p, &a).unwrap();
        let outcome = solve_primal(&problem).unwrap();
        assert!(
            outcome.eta_star >= 1.0 - 1e-6,
            "q = {q}: eta* = {}",
            outcome.eta_star
        );
        let (model, residual) =
            causal::model_for_causal_table(&p, &a, Some(&outcome)).unwrap();
        assert!(residual <= 1e-7, "q = {q}: residual {residual}");
        let check = check_assemblage_pair(&model.0, &model.1, 1e-6);
        assert!(check.ok, "q = {q}: {:?}", check.violations);
    }
}

#[test]
fn capped_solve_recovers_model_for_interior_table() {
    // an interior table (robustness strictly above 1): half noise, half a
    // separable reference; the cap binds nondegenerately at eta = 1
    let a = alice();
    let p = definite_order_probabilities(0.5)
        .unwrap()
        .mix(&ProbabilityTable::uniform(), 0.5)
        .unwrap();
    let uncapped = solve_primal(&build_primal(&p, &a).unwrap()).unwrap();
    assert!(uncapped.eta_star > 1.5, "eta* = {}", uncapped.eta_star);
    let capped = build_primal_capped(&p, &a, 1.0).unwrap();
    let capped_out = solve_primal(&capped).unwrap();
    assert!((capped_out.eta_star - 1.0).abs() < 1e-7);
    let model = capped_out.model.expect("model blocks present");
    let mut worst = 0.0f64;
    for (x, y, z) in ProbabilityTable::setting_triples() {
        for (aa, b, c) in ProbabilityTable::outcome_triples() {
            let w = model.0.operator(b, c, y, z).add(model.1.operator(b, c, y, z));
            worst = worst.max((a.element(aa, x).inner(&w).re - p.get(x, y, z, aa, b, c)).abs());
        }
    }
    assert!(worst <= 1e-7, "residual {worst}");
}

#[test]
fn uniform_table_is_causal_via_unbounded_robustness() {
    let cert = certify(&ProbabilityTable::uniform(), &alice()).unwrap();
    assert_eq!(cert.report.verdict, Verdict::CausalModelExists);
    assert!(cert.report.eta_star.is_infinite());
    assert!(cert.report.model_residual.unwrap() <= 1e-7);
}

#[test]
fn certify_ideal_switch_end_to_end() {
    let cert = certify(&ideal_table(), &alice()).unwrap();
    assert_eq!(cert.report.verdict, Verdict::IndefiniteCausalOrder);
    assert!((cert.report.s_value - -0.0794).abs() < 5e-4);
    assert_eq!(cert.report.certificate_valid, Some(true));
    let ineq = cert.inequality.unwrap();
    // derived inequality never flags the separable references
    for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let p_sep = definite_order_probabilities(q).unwrap();
        assert!(evaluate_s(&ineq, &p_sep) >= -1e-7, "q = {q}");
    }
}

#[test]
fn dephased_switch_is_causal() {
    let p = circuit_oracle_probabilities(0.0).unwrap();
    let cert = certify(&p, &alice()).unwrap();
    assert_eq!(cert.report.verdict, Verdict::CausalModelExists);
    assert!(cert.report.model_residual.unwrap() <= 1e-7);
}

#[test]
fn perturbed_certificate_is_rejected() {
    let p = ideal_table();
    let problem = build_primal(&p, &alice()).unwrap();
    let outcome = solve_primal(&problem).unwrap();
    let ineq = extract_inequality(&problem, &outcome.solution).unwrap();
    let cert = reconstruct_certificate(&ineq, &alice()).unwrap();
    let check = verify_certificate(&cert, &alice());
    assert!(check.valid, "{:?}", check.violations);

    // a +10 shift on one coefficient breaks the normalization equality
    let bumped = ineq.perturbed(0, 0, 0, 0, 0, 0, 10.0);
    let mut bad = cert.clone();
    bad.alpha = bumped;
    let check = verify_certificate(&bad, &alice());
    assert!(!check.valid);
    assert!(!check.violations.is_empty());
}
