//! Compressed-row symmetric operators from finite-difference assembly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Square sparse matrix in CSR form. Assembly routines produce symmetric
/// positive-definite operators; the storage itself does not enforce symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch(format!("triplet ({i},{j}) outside {n}x{n}")));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("operator must be square".into()));
        }
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), &t)
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), &t).expect("indices in range")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as (column, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        self.matvec_into(x.as_slice(), y.as_mut_slice());
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// A·M for a dense block M.
    pub fn mul_dense(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, m.ncols());
        for c in 0..m.ncols() {
            let col = m.column(c);
            for i in 0..self.n {
                out[(i, c)] = self.row(i).map(|(j, v)| v * col[j]).sum();
            }
        }
        out
    }

    pub fn diag(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.get(i, i))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Largest |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// Gershgorin upper bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol * v.abs().max(1.0)))
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Returns `self + s·other` (same dimension).
    pub fn add_scaled(&self, s: f64, other: &SparseOperator) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch("operator sizes differ".into()));
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, s * v)));
        }
        Self::from_triplets(self.n, &t)
    }

    /// Standard second-difference Laplacian on `n` interior nodes with spacing `h`.
    pub fn laplacian_1d(n: usize, h: f64) -> Self {
        let s = 1.0 / (h * h);
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            t.push((i, i, 2.0 * s));
            if i > 0 {
                t.push((i, i - 1, -s));
            }
            if i + 1 < n {
                t.push((i, i + 1, -s));
            }
        }
        Self::from_triplets(n, &t).expect("indices in range")
    }

    /// Five-point Laplacian on an `nx`×`ny` interior grid, x index fastest.
    pub fn laplacian_2d(nx: usize, ny: usize, hx: f64, hy: f64) -> Self {
        let (sx, sy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
        let idx = |i: usize, j: usize| j * nx + i;
        let mut t = Vec::with_capacity(5 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let k = idx(i, j);
                t.push((k, k, 2.0 * sx + 2.0 * sy));
                if i > 0 {
                    t.push((k, idx(i - 1, j), -sx));
                }
                if i + 1 < nx {
                    t.push((k, idx(i + 1, j), -sx));
                }
                if j > 0 {
                    t.push((k, idx(i, j - 1), -sy));
                }
                if j + 1 < ny {
                    t.push((k, idx(i, j + 1), -sy));
                }
            }
        }
        Self::from_triplets(nx * ny, &t).expect("indices in range")
    }
}
