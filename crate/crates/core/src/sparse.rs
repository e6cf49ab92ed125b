//! Immutable compressed-row sparse matrices.
//!
//! Every extraction, refinement and right-inverse operator in this crate is a
//! [`SparseMatrix`]. Matrices are assembled once from triplets and never
//! mutated afterwards.

use nalgebra::DMatrix;

use crate::error::{Result, SplineError};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    // CSR storage, columns sorted within each row
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate positions, out-of-range indices and non-finite values are
    /// rejected. Explicit zeros are dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= n_rows || c >= n_cols {
                return Err(SplineError::Dimension(format!(
                    "entry ({r}, {c}) outside {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(SplineError::Dimension(format!(
                    "non-finite value at ({r}, {c})"
                )));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1)
        {
            return Err(SplineError::Dimension(format!(
                "duplicate entry at ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted(n_rows, n_cols, entries))
    }

    /// Like [`SparseMatrix::from_triplets`], but values at repeated positions
    /// are summed.
    pub fn accumulate<I>(n_rows: usize, n_cols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            assert!(r < n_rows && c < n_cols, "entry ({r}, {c}) out of range");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Self::from_sorted(n_rows, n_cols, merged)
    }

    fn from_sorted(n_rows: usize, n_cols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if v == 0.0 {
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_sorted(n_rows, n_cols, Vec::new())
    }

    /// The `k x k` exchange (anti-identity) matrix.
    pub fn exchange(k: usize) -> Self {
        Self::from_sorted(k, k, (0..k).map(|i| (i, k - 1 - i, 1.0)).collect())
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                entries.push((r, c, m[(r, c)]));
            }
        }
        Self::from_sorted(m.nrows(), m.ncols(), entries)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (cols, vals) = self.row_slices(row);
        match cols.binary_search(&col) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    fn row_slices(&self, row: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Stored entries of one row as `(col, value)`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (cols, vals) = self.row_slices(row);
        cols.iter().copied().zip(vals.iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.n_cols, self.n_rows, entries)
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &SparseMatrix) -> Self {
        assert_eq!(
            self.n_cols, rhs.n_rows,
            "matmul shape mismatch: {:?} * {:?}",
            self.shape(),
            rhs.shape()
        );
        let mut entries = Vec::new();
        let mut acc = vec![0.0; rhs.n_cols];
        let mut seen = vec![false; rhs.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.n_rows {
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                entries.push((r, c, acc[c]));
                acc[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
        }
        Self::from_sorted(self.n_rows, rhs.n_cols, entries)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "mul_vec length mismatch");
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Dense product `self * x`, with `x` of shape `n_cols x d`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_cols, "mul_dense shape mismatch");
        let mut out = DMatrix::zeros(self.n_rows, x.ncols());
        for (r, c, v) in self.triplets() {
            for k in 0..x.ncols() {
                out[(r, k)] += v * x[(c, k)];
            }
        }
        out
    }

    /// Dense product `self^T * x`, with `x` of shape `n_rows x d`.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_rows, "tr_mul_dense shape mismatch");
        let mut out = DMatrix::zeros(self.n_cols, x.ncols());
        for (r, c, v) in self.triplets() {
            for k in 0..x.ncols() {
                out[(c, k)] += v * x[(r, k)];
            }
        }
        out
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &SparseMatrix) -> Self {
        let mut entries = Vec::with_capacity(self.nnz() * rhs.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in rhs.triplets() {
                entries.push((r1 * rhs.n_rows + r2, c1 * rhs.n_cols + c2, v1 * v2));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.n_rows * rhs.n_rows, self.n_cols * rhs.n_cols, entries)
    }

    /// Block-diagonal matrix with the given blocks in order.
    pub fn block_diag(blocks: &[&SparseMatrix]) -> Self {
        let n_rows = blocks.iter().map(|b| b.n_rows).sum();
        let n_cols = blocks.iter().map(|b| b.n_cols).sum();
        let mut entries = Vec::new();
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            entries.extend(b.triplets().map(|(r, c, v)| (r0 + r, c0 + c, v)));
            r0 += b.n_rows;
            c0 += b.n_cols;
        }
        Self::from_sorted(n_rows, n_cols, entries)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (_, c, v) in self.triplets() {
            sums[c] += v;
        }
        sums
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// Number of stored entries in each row.
    pub fn row_nnz(&self) -> Vec<usize> {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Largest entrywise absolute difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows {
            let (ca, va) = self.row_slices(r);
            let (cb, vb) = other.row_slices(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let d = match (ca.get(i), cb.get(j)) {
                    (Some(&a), Some(&b)) if a == b => {
                        i += 1;
                        j += 1;
                        va[i - 1] - vb[j - 1]
                    }
                    (Some(&a), Some(&b)) if a < b => {
                        i += 1;
                        va[i - 1]
                    }
                    (Some(_), None) => {
                        i += 1;
                        va[i - 1]
                    }
                    _ => {
                        j += 1;
                        vb[j - 1]
                    }
                };
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Smallest stored value, or `0.0` for an empty matrix.
    pub fn min_value(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Summary of the extraction-matrix checks that can be done in `O(nnz)`:
/// column sums, sign and row support. Rank is checked separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtaReport {
    pub max_column_sum_error: f64,
    pub min_entry: f64,
    pub max_row_nnz: usize,
}

impl DtaReport {
    pub fn of(m: &SparseMatrix) -> Self {
        DtaReport {
            max_column_sum_error: m
                .column_sums()
                .iter()
                .map(|s| (s - 1.0).abs())
                .fold(0.0, f64::max),
            min_entry: m.min_value(),
            max_row_nnz: m.row_nnz().into_iter().max().unwrap_or(0),
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_column_sum_error <= tol && self.min_entry >= 0.0
    }
}
