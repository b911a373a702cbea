//! Minimal column-compressed sparse matrix support for the conic solver.
//!
//! The solver only needs `A x`, `A^T y` products and column access while
//! assembling the quasidefinite KKT system, so this stays deliberately
//! small instead of pulling in a general linear-algebra crate.

use serde::{Deserialize, Serialize};

/// Sparse matrix in compressed-sparse-column form.  Row indices inside each
/// column are strictly increasing and duplicates have been merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// Column start offsets, length `ncols + 1`.
    pub col_ptr: Vec<usize>,
    /// Row index of each stored entry, length `nnz`.
    pub row_idx: Vec<usize>,
    /// Value of each stored entry, length `nnz`.
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from unordered `(row, col, value)` triplets,
    /// summing duplicates.  Exact zeros are kept; callers control the
    /// sparsity pattern.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &entries {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
        }
        entries.sort_by_key(|&(r, c, _)| (c, r));

        let mut out = CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::with_capacity(entries.len()),
            values: Vec::with_capacity(entries.len()),
        };
        for &(r, c, v) in &entries {
            // Entries arrive sorted by (column, row); a duplicate therefore
            // always lands immediately after its twin.
            let dup = out.col_ptr[c + 1] > 0 && *out.row_idx.last().unwrap() == r;
            if dup {
                *out.values.last_mut().unwrap() += v;
            } else {
                out.row_idx.push(r);
                out.values.push(v);
                out.col_ptr[c + 1] += 1;
            }
        }
        for c in 0..ncols {
            out.col_ptr[c + 1] += out.col_ptr[c];
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Entries of column `j` as `(row, value)` pairs.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        range.map(move |k| (self.row_idx[k], self.values[k]))
    }

    /// `out = A x`.
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        out.fill(0.0);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out[self.row_idx[k]] += self.values[k] * xj;
            }
        }
    }

    /// `out = A^T y`.
    pub fn mul_transpose(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.values[k] * y[self.row_idx[k]];
            }
            out[j] = acc;
        }
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
