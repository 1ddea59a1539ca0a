use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::RowMatrix;
use crate::error::{Error, Result};
use crate::par;

/// Eigenvalues below `RANK_CUTOFF · λ_max` are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Eigendecomposition of a weighted Gram matrix `M_w = Σ w_i a_i a_iᵀ`.
#[derive(Debug, Clone)]
pub struct GramFactorization {
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    cutoff: f64,
    rank: usize,
}

/// Assembles and factors `Σ w_i a_i a_iᵀ`.
///
/// Partial sums over fixed 128-row chunks are added in chunk order, so the
/// result does not depend on the number of threads.
pub fn gram(a: &RowMatrix, w: &[f64]) -> Result<GramFactorization> {
    if w.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "{} weights for {} rows",
            w.len(),
            a.rows()
        )));
    }
    if let Some(i) = w.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "weight {i} is {} (must be finite and nonnegative)",
            w[i]
        )));
    }
    let n = a.cols();
    let parts = par::map_chunks(a.rows(), |r| {
        let mut acc = vec![0.0; n * n];
        for i in r {
            if w[i] == 0.0 {
                continue;
            }
            let row = a.row(i);
            for j in 0..n {
                let s = w[i] * row[j];
                if s == 0.0 {
                    continue;
                }
                let out = &mut acc[j * n..j * n + j + 1];
                for (o, &rk) in out.iter_mut().zip(&row[..=j]) {
                    *o += s * rk;
                }
            }
        }
        acc
    });
    let mut m = DMatrix::zeros(n, n);
    for p in parts {
        for j in 0..n {
            for k in 0..=j {
                m[(j, k)] += p[j * n + k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            m[(k, j)] = m[(j, k)];
        }
    }
    Ok(GramFactorization::from_matrix(m))
}

impl GramFactorization {
    /// Factors a symmetric positive semidefinite matrix.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
        let cutoff = RANK_CUTOFF * lmax;
        let rank = eig
            .eigenvalues
            .iter()
            .filter(|&&l| l > cutoff && l > 0.0)
            .count();
        GramFactorization {
            matrix,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            cutoff,
            rank,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `λ_max / λ_min` over the kept eigenvalues; 1 for a zero matrix.
    pub fn condition(&self) -> f64 {
        let kept = (0..self.dim())
            .filter(|&k| self.kept(k))
            .map(|k| self.eigenvalues[k]);
        let (lo, hi) = kept.fold((f64::INFINITY, 0.0f64), |(lo, hi), l| {
            (lo.min(l), hi.max(l))
        });
        if hi > 0.0 {
            hi / lo
        } else {
            1.0
        }
    }

    #[inline]
    fn kept(&self, k: usize) -> bool {
        let l = self.eigenvalues[k];
        l > self.cutoff && l > 0.0
    }

    /// `U diag(λ) Uᵀ` with discarded eigenvalues zeroed.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.spectral(|l| l)
    }

    /// `M⁺`.
    pub fn pinv(&self) -> DMatrix<f64> {
        self.spectral(|l| 1.0 / l)
    }

    /// `(M⁺)^{1/2}`.
    pub fn pinv_sqrt(&self) -> DMatrix<f64> {
        self.spectral(|l| 1.0 / l.sqrt())
    }

    fn spectral(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let s = if self.kept(k) {
                g(self.eigenvalues[k])
            } else {
                0.0
            };
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.eigenvectors.transpose()
    }

    /// Rows `r_k = λ_k^{-1/2} u_kᵀ` for kept eigenpairs; `‖R a‖² = aᵀ M⁺ a`.
    pub fn whitener(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .filter(|&k| self.kept(k))
            .map(|k| {
                let s = 1.0 / self.eigenvalues[k].sqrt();
                self.eigenvectors.column(k).iter().map(|v| v * s).collect()
            })
            .collect()
    }

    /// `M⁺ v`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        let c = self.eigenvectors.transpose() * x;
        let mut y = DVector::zeros(self.dim());
        for k in 0..self.dim() {
            if self.kept(k) {
                y += self.eigenvectors.column(k) * (c[k] / self.eigenvalues[k]);
            }
        }
        y.iter().copied().collect()
    }

    /// `(M + λI)⁻¹ v` for `λ > 0`, using every eigenpair. Negative rounding
    /// noise in the spectrum is clamped to zero.
    pub fn solve_shifted(&self, v: &[f64], lambda: f64) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        let c = self.eigenvectors.transpose() * x;
        let mut y = DVector::zeros(self.dim());
        for k in 0..self.dim() {
            let d = self.eigenvalues[k].max(0.0) + lambda;
            if d > 0.0 {
                y += self.eigenvectors.column(k) * (c[k] / d);
            }
        }
        y.iter().copied().collect()
    }

    /// Component of `v` in the numerical null space.
    pub fn null_projection(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        let c = self.eigenvectors.transpose() * x;
        let mut y = DVector::zeros(self.dim());
        for k in 0..self.dim() {
            if !self.kept(k) {
                y += self.eigenvectors.column(k) * c[k];
            }
        }
        y.iter().copied().collect()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `aᵀ M⁺ a`.
    pub fn quad_pinv(&self, a: &[f64]) -> f64 {
        let x = DVector::from_column_slice(a);
        let c = self.eigenvectors.transpose() * x;
        (0..self.dim())
            .filter(|&k| self.kept(k))
            .map(|k| c[k] * c[k] / self.eigenvalues[k])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let a = RowMatrix::identity(2);
        let g = gram(&a, &[1.0, 1.0]).unwrap();
        assert_eq!(g.rank(), 2);
        assert_eq!(g.matrix(), &DMatrix::identity(2, 2));
        let g = gram(&a, &[1.0, 0.0]).unwrap();
        assert_eq!(g.rank(), 1);
        assert_eq!(g.matrix()[(1, 1)], 0.0);
    }

    #[test]
    fn hand_expansion() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let g = gram(&a, &[2.0, 3.0]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[5.0, 3.0, 3.0, 3.0]);
        assert_eq!(g.matrix(), &want);
    }

    #[test]
    fn negative_weight_rejected() {
        let a = RowMatrix::identity(2);
        assert!(gram(&a, &[1.0, -1.0]).is_err());
        assert!(gram(&a, &[1.0]).is_err());
    }

    #[test]
    fn penrose_identities_rank_deficient() {
        let a = RowMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 1.0, 1.0],
        ])
        .unwrap();
        let g = gram(&a, &[1.0, 0.5, 2.0]).unwrap();
        assert_eq!(g.rank(), 2);
        let m = g.matrix();
        let p = g.pinv();
        let scale = m.norm();
        assert!((m * &p * m - m).norm() <= 1e-8 * scale);
        assert!((&p * m * &p - &p).norm() <= 1e-8 * p.norm());
        assert!((m * &p - (m * &p).transpose()).norm() <= 1e-8);
        assert!((g.reconstruct() - m).norm() <= 1e-10 * scale);
    }
}
