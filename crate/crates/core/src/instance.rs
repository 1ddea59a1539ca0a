//! GLM objectives `F(x) = Σ f_i(⟨a_i, x⟩ - b_i)`.

use crate::error::{Error, Result};
use crate::linalg::RowMatrix;
use crate::losses::LossFamily;
use crate::par;

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    a: RowMatrix,
    b: Vec<f64>,
    loss: LossFamily,
}

impl ProblemInstance {
    /// Validates dimensions and rejects zero rows. A missing shift means `b = 0`.
    pub fn new(a: RowMatrix, b: Option<Vec<f64>>, loss: LossFamily) -> Result<Self> {
        let m = a.rows();
        let b = b.unwrap_or_else(|| vec![0.0; m]);
        if b.len() != m {
            return Err(Error::Dimension(format!(
                "shift has length {} but matrix has {m} rows",
                b.len()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("shift entries must be finite".into()));
        }
        if let Some(i) = a.first_zero_row() {
            return Err(Error::ZeroRow(i));
        }
        if let Some(k) = loss.per_term_len() {
            if k != m {
                return Err(Error::Dimension(format!(
                    "loss has {k} per-term parameters for {m} rows"
                )));
            }
        }
        Ok(ProblemInstance { a, b, loss })
    }

    pub fn matrix(&self) -> &RowMatrix {
        &self.a
    }

    pub fn shift(&self) -> &[f64] {
        &self.b
    }

    pub fn loss(&self) -> &LossFamily {
        &self.loss
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn has_shift(&self) -> bool {
        self.b.iter().any(|v| *v != 0.0)
    }

    /// Same rows and shift with a different loss.
    pub fn with_loss(&self, loss: LossFamily) -> Result<Self> {
        ProblemInstance::new(self.a.clone(), Some(self.b.clone()), loss)
    }

    #[inline]
    pub fn residual(&self, i: usize, x: &[f64]) -> f64 {
        self.a.row_dot(i, x) - self.b[i]
    }

    /// `⟨a_i, x⟩ - b_i` for every row.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        par::map_indexed(self.rows(), |i| self.residual(i, x))
    }

    /// `F(x)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.cols(), "objective dimension");
        par::sum_indexed(self.rows(), |i| self.loss.value(i, self.residual(i, x)))
    }

    /// `Σ_k w_k f_{i_k}(⟨a_{i_k}, x⟩ - b_{i_k})`.
    pub fn weighted_objective(&self, indices: &[usize], weights: &[f64], x: &[f64]) -> f64 {
        par::sum_indexed(indices.len(), |k| {
            let i = indices[k];
            weights[k] * self.loss.value(i, self.residual(i, x))
        })
    }

    /// Rows `(a_i, b_i)` with zero shift: `⟨(a_i, b_i), (x, -1)⟩ = ⟨a_i, x⟩ - b_i`.
    pub fn lift_shift(&self) -> ProblemInstance {
        let a = self
            .a
            .with_column(&self.b)
            .expect("shift length checked at construction");
        let m = self.rows();
        ProblemInstance {
            a,
            b: vec![0.0; m],
            loss: self.loss.clone(),
        }
    }

    /// Objective on precomputed residuals.
    pub fn objective_from_residuals(&self, r: &[f64]) -> f64 {
        par::sum_indexed(r.len(), |i| self.loss.value(i, r[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let f = LossFamily::power(2.0).unwrap();
        let inst = ProblemInstance::new(a.clone(), None, f.clone()).unwrap();
        assert_eq!(inst.shift(), &[0.0; 3]);
        assert!(matches!(
            ProblemInstance::new(a.clone(), Some(vec![1.0, 2.0]), f.clone()),
            Err(Error::Dimension(_))
        ));
        let z = RowMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(
            ProblemInstance::new(z, None, f),
            Err(Error::ZeroRow(1))
        ));
    }

    #[test]
    fn lifting_preserves_values() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, -2.0]]).unwrap();
        let inst = ProblemInstance::new(a, Some(vec![2.0, -1.0]), LossFamily::huber()).unwrap();
        let lifted = inst.lift_shift();
        assert_eq!(lifted.matrix().row(0), &[1.0, 0.0, 2.0]);
        let x = [3.0, 4.0];
        assert_eq!(lifted.residual(0, &[3.0, 4.0, -1.0]), 1.0);
        assert_eq!(lifted.objective(&[3.0, 4.0, -1.0]), inst.objective(&x));
    }

    #[test]
    fn objective_value() {
        let a = RowMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let inst =
            ProblemInstance::new(a, Some(vec![1.0, 0.0]), LossFamily::power(2.0).unwrap()).unwrap();
        assert_eq!(inst.objective(&[3.0]), 4.0 + 36.0);
        assert_eq!(inst.weighted_objective(&[1], &[0.5], &[3.0]), 18.0);
    }
}
