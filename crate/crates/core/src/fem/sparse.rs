//! Compressed sparse row storage with a fixed pattern.

use std::sync::Arc;

/// Row pattern shared by every matrix assembled on the same spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds the pattern from (row, col) pairs; duplicates are merged.
    pub fn from_entries(n: usize, mut entries: Vec<(usize, usize)>) -> Self {
        entries.sort_unstable();
        entries.dedup();
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = entries.into_iter().map(|(_, c)| c).collect();
        SparsityPattern { n, row_ptr, col_idx }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of entry (row, col) in the value array.
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_ptr[row];
        let cols = &self.col_idx[start..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|k| start + k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub pattern: Arc<SparsityPattern>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    /// Square matrix from dense rows; zeros are kept out of the pattern
    /// except on the diagonal.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || i == j {
                    entries.push((i, j));
                }
            }
        }
        let pattern = Arc::new(SparsityPattern::from_entries(n, entries));
        let mut m = CsrMatrix::zeros(pattern);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if let Some(k) = m.pattern.find(i, j) {
                    m.values[k] = v;
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.pattern.row_ptr[row]..self.pattern.row_ptr[row + 1];
        self.pattern.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n())
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A_ij - A_ji|` over the rows and columns selected by `keep`.
    pub fn asymmetry(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let mut worst = 0.0f64;
        for i in (0..self.n()).filter(|&i| keep(i)) {
            for (j, v) in self.row(i) {
                if keep(j) {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_merges_duplicates() {
        let p = SparsityPattern::from_entries(3, vec![(0, 0), (2, 1), (0, 0), (1, 2), (0, 2)]);
        assert_eq!(p.row_ptr, vec![0, 2, 3, 4]);
        assert_eq!(p.col_idx, vec![0, 2, 2, 1]);
        assert_eq!(p.find(0, 2), Some(1));
        assert_eq!(p.find(1, 1), None);
    }

    #[test]
    fn dense_round_trip_and_product() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(a.mul_vec(&[1.0, -1.0]), vec![1.0, 1.0]);
        assert_eq!(a.norm_inf(), 3.0);
        assert_eq!(a.asymmetry(|_| true), 0.0);
    }
}
