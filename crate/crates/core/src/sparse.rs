//! Compressed sparse row matrices built from coordinate triplets.

use std::fmt::Write as _;

use crate::error::{CfoError, Result};

/// Square sparse matrix in CSR form with full (both-triangle) storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    /// Set when the matrix was assembled as symmetric.
    pub symmetric: bool,
}

impl SparseMatrix {
    /// Builds an `n × n` matrix, summing duplicate entries. Explicit zeros
    /// are kept so the pattern does not depend on the values.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(CfoError::InvalidConfig(format!("triplet ({r}, {c}) out of range for n = {n}")));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..n {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&i| cols[i]);
            let mut last = usize::MAX;
            for &i in &order {
                if cols[i] == last {
                    *values.last_mut().unwrap() += vals[i];
                } else {
                    col_idx.push(cols[i]);
                    values.push(vals[i]);
                    last = cols[i];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { n, row_ptr, col_idx, values, symmetric })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>], symmetric: bool) -> Result<Self> {
        let n = rows.len();
        let mut trips = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CfoError::InvalidConfig("dense matrix is not square".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(n, &trips, symmetric)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(i) => self.values[lo + i],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |M - Mᵀ|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// `D M D` for a diagonal scaling `d`.
    pub fn scaled_symmetric(&self, d: &[f64]) -> SparseMatrix {
        let mut out = self.clone();
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[i] *= d[r] * d[self.col_idx[i]];
            }
        }
        out
    }

    /// Submatrix on `rows × cols` (both sorted index lists), returned as
    /// triplets in local numbering.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<(usize, usize, f64)> {
        let mut col_pos = vec![usize::MAX; self.n];
        for (j, &c) in cols.iter().enumerate() {
            col_pos[c] = j;
        }
        let mut out = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_pos[c] != usize::MAX {
                    out.push((i, col_pos[c], v));
                }
            }
        }
        out
    }

    /// Coordinate text dump: `n nnz`, then one `row col value` line per entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.nnz());
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                let _ = writeln!(out, "{r} {c} {v:.17e}");
            }
        }
        out
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
