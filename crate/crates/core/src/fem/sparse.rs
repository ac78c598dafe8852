//! Compressed sparse row storage with a fixed pattern.

use std::collections::BTreeSet;

/// CSR matrix whose pattern is fixed at construction; entries are
/// accumulated in place.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero matrix from per-row sorted column sets.
    pub fn from_rows(ncols: usize, rows: Vec<BTreeSet<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        for r in rows {
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a zero matrix from per-row column lists that are already
    /// sorted and free of duplicates.
    pub fn from_sorted_rows(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn clear_values(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Position of `(i, j)` in `values`, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds `v` to entry `(i, j)`. Panics if the entry is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[p] += v;
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Copies the sub-block `rows x cols` into a new CSR matrix.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CsrMatrix {
        let mut row_sets = Vec::with_capacity(rows.len());
        let mut vals = Vec::new();
        for i in rows.clone() {
            let mut set = BTreeSet::new();
            for (j, a) in self.row(i) {
                if cols.contains(&j) {
                    set.insert(j - cols.start);
                    vals.push(a);
                }
            }
            row_sets.push(set);
        }
        let mut m = CsrMatrix::from_rows(cols.len(), row_sets);
        m.values = vals;
        m
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![BTreeSet::new(); self.ncols];
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                rows[j].insert(i);
            }
        }
        let mut t = CsrMatrix::from_rows(self.nrows, rows);
        for i in 0..self.nrows {
            for (j, a) in self.row(i) {
                t.add(j, i, a);
            }
        }
        t
    }

    /// Largest `|a_ij - b_ij|` over the union of both patterns.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, a) in self.row(i) {
                worst = worst.max((a - other.get(i, j)).abs());
            }
            for (j, b) in other.row(i) {
                worst = worst.max((b - self.get(i, j)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulate_and_multiply() {
        let rows = vec![
            BTreeSet::from([0, 2]),
            BTreeSet::from([1]),
            BTreeSet::from([0, 2]),
        ];
        let mut a = CsrMatrix::from_rows(3, rows);
        a.add(0, 0, 2.0);
        a.add(0, 2, 1.0);
        a.add(0, 2, 1.0);
        a.add(1, 1, 3.0);
        a.add(2, 0, -1.0);
        a.add(2, 2, 4.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![4.0, 3.0, 3.0]);
        assert_eq!(a.get(1, 0), 0.0);
        let t = a.transpose();
        assert_eq!(t.get(0, 2), -1.0);
        assert_eq!(t.get(2, 0), 2.0);
        let b = a.block(0..2, 1..3);
        assert_eq!(b.get(0, 1), 2.0);
        assert_eq!(b.get(1, 0), 3.0);
    }

    #[test]
    #[should_panic]
    fn outside_pattern_panics() {
        let mut a = CsrMatrix::from_rows(2, vec![BTreeSet::from([0]), BTreeSet::from([1])]);
        a.add(0, 1, 1.0);
    }
}
