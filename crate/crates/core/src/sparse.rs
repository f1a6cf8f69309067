use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// A sparse real vector with a fixed dimension. Indices are strictly
/// increasing and explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds from unordered pairs; duplicate indices are summed.
    ///
    /// # Panics
    /// If an index is `>= dim`.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            assert!(i < dim, "index {i} out of range for dimension {dim}");
            match entries.last_mut() {
                Some((last, acc)) if *last == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseVector { dim, entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// Appends `tail` after the current last dimension.
    pub fn concat(&self, tail: &[f64]) -> SparseVector {
        let mut entries = self.entries.clone();
        entries.extend(
            tail.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (self.dim + j, *v)),
        );
        SparseVector {
            dim: self.dim + tail.len(),
            entries,
        }
    }

    /// Multiplies each coordinate by `factors[i]`.
    pub fn scaled(&self, factors: &[f64]) -> SparseVector {
        let pairs = self.entries.iter().map(|&(i, v)| (i, v * factors[i])).collect();
        SparseVector::from_pairs(self.dim, pairs)
    }

    /// `index:value` pairs separated by spaces.
    pub fn to_sparse_text(&self) -> String {
        let mut out = String::new();
        for (n, (i, v)) in self.entries.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{i}:{v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_are_sorted_merged_and_zero_free() {
        let v = SparseVector::from_pairs(5, vec![(3, 1.0), (0, 2.0), (3, 1.5), (1, 0.0)]);
        assert_eq!(v.entries(), &[(0, 2.0), (3, 2.5)]);
        assert_eq!(v.get(3), 2.5);
        assert_eq!(v.get(1), 0.0);
        assert_eq!(v.dot(&[1.0, 1.0, 1.0, 2.0, 1.0]), 7.0);
    }

    #[test]
    fn concat_preserves_prefix() {
        let v = SparseVector::from_pairs(3, vec![(1, 4.0)]);
        let w = v.concat(&[0.0, 2.0]);
        assert_eq!(w.dim(), 5);
        assert_eq!(w.entries(), &[(1, 4.0), (4, 2.0)]);
    }

    #[test]
    fn sparse_text() {
        let v = SparseVector::from_pairs(4, vec![(2, 0.5), (0, 1.0)]);
        assert_eq!(v.to_sparse_text(), "0:1 2:0.5");
    }

    #[test]
    #[should_panic]
    fn out_of_range_index_panics() {
        SparseVector::from_pairs(2, vec![(2, 1.0)]);
    }
}
