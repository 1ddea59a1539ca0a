//! Dense row matrices, weighted Gram factorizations and leverage scores.

mod gram;
mod leverage;

pub use gram::{gram, GramFactorization, RANK_CUTOFF};
pub use leverage::{
    leverage_auto, leverage_exact, leverage_sketch, sketch_rows, Leverage, SKETCH_FAILURE_PROB,
};

use crate::error::{Error, Result};
use crate::par;

/// `m × n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn new(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be nonempty, got {m}x{n}"
            )));
        }
        if data.len() != m * n {
            return Err(Error::Dimension(format!(
                "{m}x{n} matrix needs {} entries, got {}",
                m * n,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "entry ({}, {}) is not finite",
                k / n,
                k % n
            )));
        }
        Ok(RowMatrix { m, n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows have different lengths".into()));
        }
        Self::new(rows.len(), n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        RowMatrix { m: n, n, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.row(i), x)
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension");
        par::map_indexed(self.m, |i| self.row_dot(i, x))
    }

    /// `Aᵀ y`, summed over fixed row chunks.
    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.m, "tmatvec dimension");
        let parts = par::map_chunks(self.m, |r| {
            let mut acc = vec![0.0; self.n];
            for i in r {
                axpy(y[i], self.row(i), &mut acc);
            }
            acc
        });
        let mut out = vec![0.0; self.n];
        for p in parts {
            axpy(1.0, &p, &mut out);
        }
        out
    }

    /// Rows listed in `idx`, in order.
    pub fn select_rows(&self, idx: &[usize]) -> RowMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        RowMatrix {
            m: idx.len(),
            n: self.n,
            data,
        }
    }

    /// Index of the first all-zero row, if any.
    pub fn first_zero_row(&self) -> Option<usize> {
        (0..self.m).find(|&i| self.row(i).iter().all(|v| *v == 0.0))
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        dot(self.row(i), self.row(i)).sqrt()
    }

    /// Appends one column.
    pub fn with_column(&self, col: &[f64]) -> Result<RowMatrix> {
        if col.len() != self.m {
            return Err(Error::Dimension(format!(
                "column of length {} for {} rows",
                col.len(),
                self.m
            )));
        }
        let mut data = Vec::with_capacity(self.m * (self.n + 1));
        for (i, &c) in col.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(c);
        }
        RowMatrix::new(self.m, self.n + 1, data)
    }

    /// Appends one row.
    pub fn with_row(&self, row: &[f64]) -> Result<RowMatrix> {
        if row.len() != self.n {
            return Err(Error::Dimension(format!(
                "row of length {} for {} columns",
                row.len(),
                self.n
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(row);
        RowMatrix::new(self.m + 1, self.n, data)
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.m, self.n, &self.data)
    }

    /// Rough spectral norm from 30 power iterations on `AᵀA`.
    pub fn norm_estimate(&self) -> f64 {
        let mut v = vec![1.0 / (self.n as f64).sqrt(); self.n];
        let mut s = 0.0;
        for _ in 0..30 {
            let w = self.tmatvec(&self.matvec(&v));
            let nw = dot(&w, &w).sqrt();
            if nw == 0.0 {
                return 0.0;
            }
            s = nw.sqrt();
            v = w.iter().map(|x| x / nw).collect();
        }
        s
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(RowMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(RowMatrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(RowMatrix::new(0, 1, vec![]).is_err());
        let a = RowMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(a.first_zero_row(), Some(1));
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn products() {
        let a = RowMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(a.matvec(&[1.0, -1.0]), vec![-1.0, -1.0, -1.0]);
        assert_eq!(a.tmatvec(&[1.0, 0.0, 1.0]), vec![6.0, 8.0]);
        let s = a.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        let l = a.with_column(&[7.0, 8.0, 9.0]).unwrap();
        assert_eq!(l.row(1), &[3.0, 4.0, 8.0]);
    }

    #[test]
    fn norm_estimate_of_diagonal() {
        let a = RowMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((a.norm_estimate() - 3.0).abs() < 1e-6);
    }
}
