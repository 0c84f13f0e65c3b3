//! Round-trip properties of the table interchange formats.

use proptest::prelude::*;
use switch::ProbabilityTable;

fn arb_table() -> impl Strategy<Value = ProbabilityTable> {
    proptest::collection::vec(0.0f64..1.0, 128).prop_map(|raw| {
        let mut values = [0.0f64; 128];
        for s in 0..8 {
            let cells = &raw[s * 16..(s + 1) * 16];
            let total: f64 = cells.iter().sum::<f64>().max(1e-9);
            for (o, &c) in cells.iter().enumerate() {
                values[s * 16 + o] = c / total;
            }
            // force exact per-setting normalization
            let sum_now: f64 = values[s * 16..(s + 1) * 16].iter().sum();
            values[s * 16] += 1.0 - sum_now;
        }
        ProbabilityTable::from_values(values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip_is_bit_exact(t in arb_table()) {
        let v = t.to_json();
        let text = serde_json::to_string(&v).unwrap();
        let back = ProbabilityTable::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for (a, b) in t.values().iter().zip(back.values()) {
            prop_assert!(a.to_bits() == b.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(t in arb_table()) {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ProbabilityTable::read_csv(buf.as_slice()).unwrap();
        for (a, b) in t.values().iter().zip(back.values()) {
            prop_assert!(a.to_bits() == b.to_bits());
        }
    }
}

#[test]
fn json_file_round_trip() {
    let t = switch::circuit_oracle_probabilities(0.991).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.json");
    t.write_json(&path).unwrap();
    let back = ProbabilityTable::read_json(&path).unwrap();
    assert_eq!(t.max_abs_diff(&back), 0.0);
}

#[test]
fn csv_rejects_incomplete_tables() {
    let csv = "x,y,z,a,b,c,p\n0,0,0,0,0,0,1.0\n";
    assert!(ProbabilityTable::read_csv(csv.as_bytes()).is_err());
}

#[test]
fn csv_rejects_out_of_range_indices() {
    let csv = "x,y,z,a,b,c,p\n0,0,0,0,0,7,1.0\n";
    assert!(ProbabilityTable::read_csv(csv.as_bytes()).is_err());
}
