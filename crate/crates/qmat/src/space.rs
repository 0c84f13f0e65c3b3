use std::collections::HashSet;

use crate::{QmatError, Result};

/// Ordered list of labeled subsystems with per-subsystem dimensions.
///
/// The first subsystem occupies the most significant index block of the flat
/// index: `flat = sum_k i_k * stride_k` with `stride_k = prod_{l>k} d_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorSpace {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl TensorSpace {
    pub fn new(labels: &[&str], dims: &[usize]) -> Result<Self> {
        if labels.len() != dims.len() {
            return Err(QmatError::InvalidSpace(
                "labels and dims must have equal length".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(QmatError::InvalidSpace("zero-dimensional subsystem".into()));
        }
        let mut seen = HashSet::new();
        for l in labels {
            if !seen.insert(*l) {
                return Err(QmatError::DuplicateLabel((*l).into()));
            }
        }
        Ok(Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            dims: dims.to_vec(),
        })
    }

    /// Space of qubits, one per label.
    pub fn qubits(labels: &[&str]) -> Result<Self> {
        Self::new(labels, &vec![2; labels.len()])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.labels.iter().map(|s| s.as_str()).collect()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| QmatError::UnknownLabel(label.into()))
    }

    pub fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.position(l)).collect()
    }

    /// Strides of each subsystem in the flat index (big-endian).
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut s = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    /// Subspace of the listed labels, keeping this space's relative order.
    pub fn subspace(&self, keep: &[&str]) -> Result<TensorSpace> {
        let pos = self.positions(keep)?;
        let mut idx: Vec<usize> = pos;
        idx.sort_unstable();
        let labels: Vec<&str> = idx.iter().map(|&k| self.labels[k].as_str()).collect();
        let dims: Vec<usize> = idx.iter().map(|&k| self.dims[k]).collect();
        TensorSpace::new(&labels, &dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_are_big_endian() {
        let s = TensorSpace::new(&["a", "b", "c"], &[2, 3, 4]).unwrap();
        assert_eq!(s.strides(), vec![12, 4, 1]);
        assert_eq!(s.total_dim(), 24);
    }

    #[test]
    fn rejects_duplicates() {
        assert!(TensorSpace::qubits(&["a", "a"]).is_err());
    }

    #[test]
    fn subspace_keeps_order() {
        let s = TensorSpace::qubits(&["a", "b", "c"]).unwrap();
        let sub = s.subspace(&["c", "a"]).unwrap();
        assert_eq!(sub.labels(), vec!["a", "c"]);
    }
}
