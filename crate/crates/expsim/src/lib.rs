//! Finite-count statistics for the switch experiment: Poisson-distributed
//! photon counts, frequency estimation, Monte Carlo uncertainty of the
//! inequality value, count-file ingestion, and instrument fidelity reports.
//!
//! Sampling is fully reproducible: sample k of a run seeded with s uses a
//! ChaCha12 stream cipher RNG seeded with SplitMix64(s XOR k), and counts are
//! always drawn in the fixed (x, y, z, a, b, c) lexicographic cell order, so
//! identical configurations produce identical outputs bit for bit on every
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use causal::{InequalityCoefficients, evaluate_s};
use switch::{InstrumentSet, ProbabilityTable};

mod fidelity;

pub use fidelity::{
    fidelity_report, read_measured_states, synthesize_states_with_fidelities,
    write_measured_states,
};

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("mean counts per setting must be positive, got {0}")]
    BadMeanCounts(f64),
    #[error("monte carlo needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("setting (x={x}, y={y}, z={z}) has zero total counts")]
    EmptySetting { x: usize, y: usize, z: usize },
    #[error("count file: {0}")]
    CountFile(String),
    #[error("fidelity input: {0}")]
    Fidelity(String),
    #[error("switch-layer error: {0}")]
    Switch(#[from] switch::SwitchError),
    #[error("matrix error: {0}")]
    Matrix(#[from] qmat::QmatError),
}

pub type Result<T> = std::result::Result<T, ExpError>;

/// Photon counts per outcome cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    counts: [u64; 128],
}

impl CountTable {
    pub fn from_counts(counts: [u64; 128]) -> Self {
        Self { counts }
    }

    pub fn get(&self, x: usize, y: usize, z: usize, a: usize, b: usize, c: usize) -> u64 {
        self.counts[ProbabilityTable::flat_index(x, y, z, a, b, c)]
    }

    pub fn counts(&self) -> &[u64; 128] {
        &self.counts
    }

    pub fn setting_total(&self, x: usize, y: usize, z: usize) -> u64 {
        ProbabilityTable::outcome_triples()
            .map(|(a, b, c)| self.get(x, y, z, a, b, c))
            .sum()
    }

    /// Write as CSV with columns x,y,z,a,b,c,count.
    pub fn write_csv(&self, sink: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["x", "y", "z", "a", "b", "c", "count"])
            .map_err(|e| ExpError::CountFile(e.to_string()))?;
        for (x, y, z) in ProbabilityTable::setting_triples() {
            for (a, b, c) in ProbabilityTable::outcome_triples() {
                w.write_record([
                    x.to_string(),
                    y.to_string(),
                    z.to_string(),
                    a.to_string(),
                    b.to_string(),
                    c.to_string(),
                    self.get(x, y, z, a, b, c).to_string(),
                ])
                .map_err(|e| ExpError::CountFile(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| ExpError::CountFile(e.to_string()))
    }
}

/// Configuration of a simulated acquisition run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// expected total number of photons per setting triple
    pub mean_counts_per_setting: f64,
    /// interferometric visibility of the simulated switch
    pub visibility: f64,
    pub seed: u64,
    /// number of Monte Carlo repetitions used for uncertainty estimates
    pub mc_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mean_counts_per_setting: 4.0e4,
            visibility: 1.0,
            seed: 0,
            mc_samples: 50,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn sample_rng(seed: u64, sample_index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ sample_index.wrapping_mul(0xa076_1d64_78bd_642f)))
}

/// Draw one count table: each cell independently Poisson with mean
/// `mean_counts_per_setting * p`.
pub fn sample_counts(p: &ProbabilityTable, cfg: &ExperimentConfig) -> Result<CountTable> {
    sample_counts_indexed(p, cfg, 0)
}

/// As [`sample_counts`], with an explicit Monte Carlo sample index deriving
/// its own substream so samples are independent of evaluation order.
pub fn sample_counts_indexed(
    p: &ProbabilityTable,
    cfg: &ExperimentConfig,
    sample_index: u64,
) -> Result<CountTable> {
    if !(cfg.mean_counts_per_setting > 0.0) || !cfg.mean_counts_per_setting.is_finite() {
        return Err(ExpError::BadMeanCounts(cfg.mean_counts_per_setting));
    }
    let mut rng = sample_rng(cfg.seed, sample_index);
    let mut counts = [0u64; 128];
    for (x, y, z) in ProbabilityTable::setting_triples() {
        for (a, b, c) in ProbabilityTable::outcome_triples() {
            let mean = cfg.mean_counts_per_setting * p.get(x, y, z, a, b, c);
            let idx = ProbabilityTable::flat_index(x, y, z, a, b, c);
            counts[idx] = if mean > 0.0 {
                let draw = Poisson::new(mean).expect("positive mean").sample(&mut rng);
                draw as u64
            } else {
                0
            };
        }
    }
    Ok(CountTable::from_counts(counts))
}

/// Per-setting normalized frequencies. The rounding residue of the division
/// is folded into the largest cell so each setting sums to one exactly.
pub fn frequencies(counts: &CountTable) -> Result<ProbabilityTable> {
    let mut values = [0.0f64; 128];
    for (x, y, z) in ProbabilityTable::setting_triples() {
        let total = counts.setting_total(x, y, z);
        if total == 0 {
            return Err(ExpError::EmptySetting { x, y, z });
        }
        let mut argmax = ProbabilityTable::flat_index(x, y, z, 0, 0, 0);
        for (a, b, c) in ProbabilityTable::outcome_triples() {
            let idx = ProbabilityTable::flat_index(x, y, z, a, b, c);
            values[idx] = counts.get(x, y, z, a, b, c) as f64 / total as f64;
            if values[idx] > values[argmax] {
                argmax = idx;
            }
        }
        // close the sum on the largest cell; iterate because the adjustment
        // itself shifts the rounding of the running sum
        for _ in 0..4 {
            let sum: f64 = ProbabilityTable::outcome_triples()
                .map(|(a, b, c)| values[ProbabilityTable::flat_index(x, y, z, a, b, c)])
                .sum();
            if sum == 1.0 {
                break;
            }
            values[argmax] += 1.0 - sum;
        }
    }
    Ok(ProbabilityTable::from_values(values)?)
}

/// Monte Carlo statistics of the inequality value under Poisson counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub s_mean: f64,
    pub s_std: f64,
    /// |s_mean| / s_std
    pub sigmas: f64,
    pub samples: Vec<f64>,
    pub config: ExperimentConfig,
}

/// Draw `cfg.mc_samples` count tables from the model table, evaluate S on
/// each frequency table, and report mean, standard deviation (ddof = 1), and
/// the sigma ratio.
pub fn monte_carlo_s(
    p_model: &ProbabilityTable,
    alpha: &InequalityCoefficients,
    cfg: &ExperimentConfig,
) -> Result<MonteCarloReport> {
    if cfg.mc_samples < 2 {
        return Err(ExpError::TooFewSamples(cfg.mc_samples));
    }
    let mut samples = Vec::with_capacity(cfg.mc_samples);
    for k in 0..cfg.mc_samples {
        let counts = sample_counts_indexed(p_model, cfg, k as u64)?;
        let freq = frequencies(&counts)?;
        samples.push(evaluate_s(alpha, &freq));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    Ok(MonteCarloReport {
        s_mean: mean,
        s_std: std,
        sigmas: if std > 0.0 { mean.abs() / std } else { f64::INFINITY },
        samples,
        config: cfg.clone(),
    })
}

/// Find a mean count level at which the Monte Carlo spread of S matches
/// `target_std`, using the 1/sqrt(N) scaling of the standard deviation.
pub fn calibrate_counts(
    p_model: &ProbabilityTable,
    alpha: &InequalityCoefficients,
    target_std: f64,
    cfg: &ExperimentConfig,
) -> Result<f64> {
    if !(target_std > 0.0) {
        return Err(ExpError::BadMeanCounts(target_std));
    }
    // pilot run at the configured count level, then one rescaling pass
    let pilot_cfg = ExperimentConfig { mc_samples: cfg.mc_samples.max(100), ..cfg.clone() };
    let pilot = monte_carlo_s(p_model, alpha, &pilot_cfg)?;
    let kappa = pilot.s_std * pilot_cfg.mean_counts_per_setting.sqrt();
    Ok((kappa / target_std).powi(2))
}

/// Parse a CSV count file with header x,y,z,a,b,c,count. Unknown indices are
/// rejected; cells that never appear default to zero (the per-setting totals
/// must still be positive for frequency conversion).
pub fn ingest_counts(reader: impl std::io::Read) -> Result<CountTable> {
    let mut r = csv::Reader::from_reader(reader);
    {
        let headers = r.headers().map_err(|e| ExpError::CountFile(e.to_string()))?;
        let expect = ["x", "y", "z", "a", "b", "c", "count"];
        let got: Vec<&str> = headers.iter().map(str::trim).collect();
        if got != expect {
            return Err(ExpError::CountFile(format!(
                "header must be x,y,z,a,b,c,count; got {}",
                got.join(",")
            )));
        }
    }
    let mut counts = [0u64; 128];
    let mut seen = [false; 128];
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| ExpError::CountFile(format!("line {line}: {e}")))?;
        if rec.len() != 7 {
            return Err(ExpError::CountFile(format!("line {line}: expected 7 columns")));
        }
        let idx: Vec<i64> = (0..6)
            .map(|k| {
                rec[k].trim().parse::<i64>().map_err(|_| {
                    ExpError::CountFile(format!("line {line}: bad index `{}`", &rec[k]))
                })
            })
            .collect::<Result<_>>()?;
        let count: i64 = rec[6]
            .trim()
            .parse()
            .map_err(|_| ExpError::CountFile(format!("line {line}: bad count `{}`", &rec[6])))?;
        if count < 0 {
            return Err(ExpError::CountFile(format!("line {line}: negative count {count}")));
        }
        let (x, y, z, a, b, c) = (idx[0], idx[1], idx[2], idx[3], idx[4], idx[5]);
        if !(0..2).contains(&x)
            || !(0..2).contains(&y)
            || !(0..2).contains(&z)
            || !(0..2).contains(&a)
            || !(0..2).contains(&b)
            || !(0..4).contains(&c)
        {
            return Err(ExpError::CountFile(format!("line {line}: index out of range")));
        }
        let flat = ProbabilityTable::flat_index(
            x as usize, y as usize, z as usize, a as usize, b as usize, c as usize,
        );
        counts[flat] = counts[flat].saturating_add(count as u64);
        seen[flat] = true;
    }
    // a completely absent setting is an error; missing cells inside observed
    // settings default to zero
    for (x, y, z) in ProbabilityTable::setting_triples() {
        let any = ProbabilityTable::outcome_triples()
            .any(|(a, b, c)| seen[ProbabilityTable::flat_index(x, y, z, a, b, c)]);
        if !any {
            return Err(ExpError::CountFile(format!(
                "no rows for setting (x={x}, y={y}, z={z})"
            )));
        }
    }
    Ok(CountTable::from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deterministic_table() -> ProbabilityTable {
        switch::circuit_oracle_probabilities(1.0).unwrap()
    }

    #[test]
    fn deterministic_cell_gets_all_counts() {
        // p(000|000) = 1, so that cell draws Poisson(N) and the rest are 0
        let cfg = ExperimentConfig { mean_counts_per_setting: 1000.0, seed: 7, ..Default::default() };
        let t = sample_counts(&deterministic_table(), &cfg).unwrap();
        assert!(t.get(0, 0, 0, 0, 0, 0) > 0);
        for (a, b, c) in ProbabilityTable::outcome_triples() {
            if (a, b, c) != (0, 0, 0) {
                assert_eq!(t.get(0, 0, 0, a, b, c), 0);
            }
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let cfg = ExperimentConfig { seed: 42, ..Default::default() };
        let p = deterministic_table();
        let t1 = sample_counts(&p, &cfg).unwrap();
        let t2 = sample_counts(&p, &cfg).unwrap();
        assert_eq!(t1, t2);
        let other = ExperimentConfig { seed: 43, ..cfg };
        assert_ne!(sample_counts(&p, &other).unwrap(), t1);
    }

    #[test]
    fn empirical_mean_matches_poisson_moments() {
        let p = deterministic_table();
        let n = 2000.0;
        let draws = 1000;
        let mut total = 0u64;
        for k in 0..draws {
            let cfg = ExperimentConfig { mean_counts_per_setting: n, seed: 1234, ..Default::default() };
            total += sample_counts_indexed(&p, &cfg, k).unwrap().get(0, 0, 0, 0, 0, 0);
        }
        let mean = total as f64 / draws as f64;
        let bound = 3.0 * n.sqrt() / (draws as f64).sqrt();
        assert!((mean - n).abs() < bound, "mean {mean} vs {n} +- {bound}");
    }

    #[test]
    fn frequencies_normalize_exactly() {
        let cfg = ExperimentConfig { mean_counts_per_setting: 500.0, seed: 5, visibility: 0.8, ..Default::default() };
        let p = switch::circuit_oracle_probabilities(0.8).unwrap();
        let f = frequencies(&sample_counts(&p, &cfg).unwrap()).unwrap();
        for (x, y, z) in ProbabilityTable::setting_triples() {
            let total: f64 = ProbabilityTable::outcome_triples()
                .map(|(a, b, c)| f.get(x, y, z, a, b, c))
                .sum();
            assert_eq!(total, 1.0);
        }
    }

    #[test]
    fn frequency_sums_exact_across_many_draws() {
        // stress the exact-sum closure across a spread of count magnitudes
        for seed in 0..40u64 {
            let n = 50.0 * 10f64.powf((seed % 5) as f64);
            let cfg = ExperimentConfig {
                mean_counts_per_setting: n,
                seed,
                visibility: 0.7,
                ..Default::default()
            };
            let p = switch::circuit_oracle_probabilities(0.7).unwrap();
            let f = frequencies(&sample_counts(&p, &cfg).unwrap()).unwrap();
            for (x, y, z) in ProbabilityTable::setting_triples() {
                let total: f64 = ProbabilityTable::outcome_triples()
                    .map(|(a, b, c)| f.get(x, y, z, a, b, c))
                    .sum();
                assert_eq!(total, 1.0, "seed {seed} setting ({x},{y},{z})");
            }
        }
    }

    #[test]
    fn law_of_large_numbers() {
        let p = switch::circuit_oracle_probabilities(0.5).unwrap();
        let cfg = ExperimentConfig { mean_counts_per_setting: 1e7, seed: 9, ..Default::default() };
        let f = frequencies(&sample_counts(&p, &cfg).unwrap()).unwrap();
        assert!(f.max_abs_diff(&p) < 1e-3);
    }

    #[test]
    fn zero_alpha_monte_carlo() {
        let alpha = InequalityCoefficients::zero();
        let cfg = ExperimentConfig { mean_counts_per_setting: 100.0, seed: 3, ..Default::default() };
        let rep = monte_carlo_s(&deterministic_table(), &alpha, &cfg).unwrap();
        assert_eq!(rep.s_mean, 0.0);
        assert_eq!(rep.s_std, 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let p = deterministic_table();
        let alpha = InequalityCoefficients::zero();
        let bad = ExperimentConfig { mean_counts_per_setting: 0.0, ..Default::default() };
        assert!(sample_counts(&p, &bad).is_err());
        let few = ExperimentConfig { mc_samples: 1, ..Default::default() };
        assert!(monte_carlo_s(&p, &alpha, &few).is_err());
    }

    #[test]
    fn count_csv_round_trip() {
        let cfg = ExperimentConfig { mean_counts_per_setting: 300.0, seed: 11, ..Default::default() };
        let p = switch::circuit_oracle_probabilities(0.991).unwrap();
        let t = sample_counts(&p, &cfg).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ingest_counts(buf.as_slice()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn ingest_rejects_missing_setting_and_negatives() {
        let only_one = "x,y,z,a,b,c,count\n0,0,0,0,0,0,5\n";
        let err = ingest_counts(only_one.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("(x=0, y=0, z=1)") || err.contains("setting"), "{err}");
        let negative = "x,y,z,a,b,c,count\n0,0,0,0,0,0,-2\n";
        assert!(ingest_counts(negative.as_bytes()).is_err());
    }
}
