//! Statistical behavior of the Monte Carlo layer against the certification
//! pipeline: scaling of the uncertainty, count calibration, and end-to-end
//! count-file processing.

use std::sync::OnceLock;

use causal::{InequalityCoefficients, build_primal, evaluate_s, extract_inequality, solve_primal};
use expsim::{ExperimentConfig, calibrate_counts, frequencies, ingest_counts, monte_carlo_s, sample_counts};
use switch::{Party, ProbabilityTable, build_instruments, circuit_oracle_probabilities};

fn ideal_alpha() -> &'static InequalityCoefficients {
    static ALPHA: OnceLock<InequalityCoefficients> = OnceLock::new();
    ALPHA.get_or_init(|| {
        let p = circuit_oracle_probabilities(1.0).unwrap();
        let alice = build_instruments(Party::Alice);
        let problem = build_primal(&p, &alice).unwrap();
        let outcome = solve_primal(&problem).unwrap();
        extract_inequality(&problem, &outcome.solution).unwrap()
    })
}

#[test]
fn s_mean_tracks_the_model_value() {
    let alpha = ideal_alpha();
    let p = circuit_oracle_probabilities(1.0).unwrap();
    let cfg = ExperimentConfig {
        mean_counts_per_setting: 1e6,
        seed: 271828,
        ..Default::default()
    };
    let rep = monte_carlo_s(&p, alpha, &cfg).unwrap();
    let s_model = evaluate_s(alpha, &p);
    assert!((s_model - -0.0793547).abs() < 5e-4);
    assert!(
        (rep.s_mean - s_model).abs() < 3.0 * rep.s_std,
        "mean {} model {} std {}",
        rep.s_mean,
        s_model,
        rep.s_std
    );
}

#[test]
fn s_std_scales_with_inverse_sqrt_counts() {
    let alpha = ideal_alpha();
    let p = circuit_oracle_probabilities(0.991).unwrap();
    // 20 Monte Carlo batches across one decade of count levels
    let mut logs: Vec<(f64, f64)> = Vec::new();
    for k in 0..20 {
        let n = 4.0e3 * 10f64.powf(k as f64 / 19.0);
        let cfg = ExperimentConfig {
            mean_counts_per_setting: n,
            visibility: 0.991,
            seed: 1000 + k,
            mc_samples: 200,
        };
        let rep = monte_carlo_s(&p, alpha, &cfg).unwrap();
        logs.push((n.ln(), rep.s_std.ln()));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    assert!(
        (slope - -0.5).abs() <= 0.05,
        "fitted exponent {slope} should be -0.5 +- 0.05"
    );
}

#[test]
fn calibration_hits_target_std() {
    let alpha = ideal_alpha();
    let p = circuit_oracle_probabilities(0.991).unwrap();
    let cfg = ExperimentConfig { visibility: 0.991, seed: 5150, ..Default::default() };
    let n_cal = calibrate_counts(&p, alpha, 3e-4, &cfg).unwrap();
    let check = ExperimentConfig { mean_counts_per_setting: n_cal, ..cfg };
    let rep = monte_carlo_s(&p, alpha, &check).unwrap();
    assert!(
        rep.s_std > 2e-4 && rep.s_std < 4e-4,
        "calibrated N = {n_cal}, achieved std {}",
        rep.s_std
    );
    assert!(rep.s_mean < 0.0);
    assert!(rep.sigmas > 100.0, "sigmas = {}", rep.sigmas);
}

#[test]
fn count_file_pipeline_end_to_end() {
    let alpha = ideal_alpha();
    let p = circuit_oracle_probabilities(0.991).unwrap();
    let cfg = ExperimentConfig {
        mean_counts_per_setting: 5e4,
        visibility: 0.991,
        seed: 99,
        ..Default::default()
    };
    let counts = sample_counts(&p, &cfg).unwrap();
    let mut buf = Vec::new();
    counts.write_csv(&mut buf).unwrap();
    let back = ingest_counts(buf.as_slice()).unwrap();
    let freq = frequencies(&back).unwrap();
    let s = evaluate_s(alpha, &freq);
    assert!(s < -0.05, "S from ingested counts = {s}");
}

#[test]
fn frequencies_sum_to_one_for_every_sample() {
    let p = circuit_oracle_probabilities(0.7).unwrap();
    for k in 0..10 {
        let cfg = ExperimentConfig {
            mean_counts_per_setting: 777.0,
            seed: k,
            ..Default::default()
        };
        let f = frequencies(&sample_counts(&p, &cfg).unwrap()).unwrap();
        for (x, y, z) in ProbabilityTable::setting_triples() {
            let total: f64 = ProbabilityTable::outcome_triples()
                .map(|(a, b, c)| f.get(x, y, z, a, b, c))
                .sum();
            assert_eq!(total, 1.0);
        }
    }
}
