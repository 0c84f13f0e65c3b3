//! Outcome probability tables over 8 settings x 16 joint outcomes, with the
//! JSON and CSV interchange formats.
//!
//! JSON: an object keyed by `"x,y,z"` with a `[2][4]`-nested array per Alice
//! outcome, i.e. `values[a][b][c]`. CSV: columns `x,y,z,a,b,c,p`. Both use
//! shortest round-trip float formatting, so serialized tables re-read
//! bit-exactly.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value, json};

use crate::{Result, SwitchError};

/// p(abc|xyz) with settings x,y,z in {0,1} and outcomes a,b in {0,1},
/// c in {0,..,3}. Values are clipped at -1e-12 and per-setting sums must be
/// 1 within 1e-9.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    values: [f64; 128],
}

impl ProbabilityTable {
    pub fn flat_index(x: usize, y: usize, z: usize, a: usize, b: usize, c: usize) -> usize {
        debug_assert!(x < 2 && y < 2 && z < 2 && a < 2 && b < 2 && c < 4);
        (((x * 2 + y) * 2 + z) * 2 + a) * 8 + b * 4 + c
    }

    pub fn setting_triples() -> impl Iterator<Item = (usize, usize, usize)> {
        (0..8).map(|s| (s >> 2 & 1, s >> 1 & 1, s & 1))
    }

    pub fn outcome_triples() -> impl Iterator<Item = (usize, usize, usize)> {
        (0..16).map(|o| (o >> 3 & 1, o >> 2 & 1, o & 3))
    }

    /// Validate invariants: clip tiny negatives to zero, reject anything more
    /// negative than -1e-12 or settings that do not sum to one within 1e-9.
    pub fn from_values(mut values: [f64; 128]) -> Result<Self> {
        for (x, y, z) in Self::setting_triples() {
            for (a, b, c) in Self::outcome_triples() {
                let idx = Self::flat_index(x, y, z, a, b, c);
                let v = values[idx];
                if !v.is_finite() || v < -1e-12 {
                    return Err(SwitchError::NegativeProbability { x, y, z, a, b, c, value: v });
                }
                if v < 0.0 {
                    values[idx] = 0.0;
                }
            }
            let total: f64 = Self::outcome_triples()
                .map(|(a, b, c)| values[Self::flat_index(x, y, z, a, b, c)])
                .sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(SwitchError::Normalization { x, y, z, total });
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, x: usize, y: usize, z: usize, a: usize, b: usize, c: usize) -> f64 {
        self.values[Self::flat_index(x, y, z, a, b, c)]
    }

    pub fn values(&self) -> &[f64; 128] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Affine mixture lam * self + (1 - lam) * other.
    pub fn mix(&self, other: &Self, lam: f64) -> Result<Self> {
        let mut values = [0.0; 128];
        for (i, v) in values.iter_mut().enumerate() {
            *v = lam * self.values[i] + (1.0 - lam) * other.values[i];
        }
        Self::from_values(values)
    }

    /// The uniform table: every outcome 1/16.
    pub fn uniform() -> Self {
        Self { values: [1.0 / 16.0; 128] }
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (x, y, z) in Self::setting_triples() {
            let nested: Vec<Vec<Vec<f64>>> = (0..2)
                .map(|a| {
                    (0..2)
                        .map(|b| (0..4).map(|c| self.get(x, y, z, a, b, c)).collect())
                        .collect()
                })
                .collect();
            map.insert(format!("{x},{y},{z}"), json!(nested));
        }
        Value::Object(map)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| SwitchError::Serialization("expected a JSON object".into()))?;
        let mut values = [f64::NAN; 128];
        for (x, y, z) in Self::setting_triples() {
            let key = format!("{x},{y},{z}");
            let nested = obj
                .get(&key)
                .ok_or_else(|| SwitchError::Serialization(format!("missing setting key {key}")))?;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..4 {
                        let val = nested
                            .get(a)
                            .and_then(|va| va.get(b))
                            .and_then(|vb| vb.get(c))
                            .and_then(Value::as_f64)
                            .ok_or_else(|| {
                                SwitchError::Serialization(format!(
                                    "setting {key}: missing value at [{a}][{b}][{c}]"
                                ))
                            })?;
                        values[Self::flat_index(x, y, z, a, b, c)] = val;
                    }
                }
            }
        }
        Self::from_values(values)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())
            .map_err(|e| SwitchError::Serialization(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| SwitchError::Serialization(e.to_string()))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SwitchError::Serialization(e.to_string()))?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| SwitchError::Serialization(e.to_string()))?;
        Self::from_json(&v)
    }

    /// One row per outcome cell: x,y,z,a,b,c,p.
    pub fn write_csv(&self, sink: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["x", "y", "z", "a", "b", "c", "p"])
            .map_err(|e| SwitchError::Serialization(e.to_string()))?;
        for (x, y, z) in Self::setting_triples() {
            for (a, b, c) in Self::outcome_triples() {
                w.write_record([
                    x.to_string(),
                    y.to_string(),
                    z.to_string(),
                    a.to_string(),
                    b.to_string(),
                    c.to_string(),
                    format!("{}", self.get(x, y, z, a, b, c)),
                ])
                .map_err(|e| SwitchError::Serialization(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| SwitchError::Serialization(e.to_string()))
    }

    pub fn read_csv(reader: impl std::io::Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut values = [f64::NAN; 128];
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| SwitchError::Serialization(format!("row {}: {e}", i + 2)))?;
            if rec.len() != 7 {
                return Err(SwitchError::Serialization(format!(
                    "row {}: expected 7 columns",
                    i + 2
                )));
            }
            let idx: Vec<usize> = (0..6)
                .map(|k| {
                    rec[k].trim().parse::<usize>().map_err(|_| {
                        SwitchError::Serialization(format!("row {}: bad index `{}`", i + 2, &rec[k]))
                    })
                })
                .collect::<Result<_>>()?;
            let p: f64 = rec[6].trim().parse().map_err(|_| {
                SwitchError::Serialization(format!("row {}: bad probability `{}`", i + 2, &rec[6]))
            })?;
            if idx[0] > 1 || idx[1] > 1 || idx[2] > 1 || idx[3] > 1 || idx[4] > 1 || idx[5] > 3 {
                return Err(SwitchError::Serialization(format!(
                    "row {}: index out of range",
                    i + 2
                )));
            }
            values[Self::flat_index(idx[0], idx[1], idx[2], idx[3], idx[4], idx[5])] = p;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(SwitchError::Serialization("incomplete table".into()));
        }
        Self::from_values(values)
    }

    /// Total-variation distance per setting, maximized over settings.
    pub fn max_total_variation(&self, other: &Self) -> f64 {
        Self::setting_triples()
            .map(|(x, y, z)| {
                0.5 * Self::outcome_triples()
                    .map(|(a, b, c)| (self.get(x, y, z, a, b, c) - other.get(x, y, z, a, b, c)).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_valid() {
        let t = ProbabilityTable::uniform();
        assert_eq!(t.get(1, 0, 1, 1, 1, 3), 1.0 / 16.0);
    }

    #[test]
    fn rejects_unnormalized() {
        let mut v = [1.0 / 16.0; 128];
        v[0] = 0.5;
        assert!(matches!(
            ProbabilityTable::from_values(v),
            Err(SwitchError::Normalization { .. })
        ));
    }

    #[test]
    fn rejects_negative_beyond_tolerance() {
        let mut v = [1.0 / 16.0; 128];
        v[3] = -1e-6;
        assert!(matches!(
            ProbabilityTable::from_values(v),
            Err(SwitchError::NegativeProbability { .. })
        ));
    }

    #[test]
    fn clips_tiny_negatives() {
        let mut v = [1.0 / 16.0; 128];
        v[3] = -5e-13;
        v[4] = 2.0 / 16.0 + 5e-13;
        let t = ProbabilityTable::from_values(v).unwrap();
        assert_eq!(t.values()[3], 0.0);
    }
}
