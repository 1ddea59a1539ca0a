//! Huber regression on a globally valid sparsifier.

use serde::{Deserialize, Serialize};

use super::{glm_oracle, OracleProblem, OracleStop};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::RowMatrix;
use crate::losses::LossFamily;
use crate::sparsify::{huber_sparsify, SparsifiedModel, SparsifyConfig};

const ORACLE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuberSolution {
    pub x: Vec<f64>,
    /// Huber objective of `x` over all rows.
    pub objective: f64,
    /// Objective of the sparse surrogate at `x`.
    pub sparse_objective: f64,
    pub oracle_iterations: usize,
    pub oracle_stop: OracleStop,
    pub model: SparsifiedModel,
}

/// Sparsifies the Huber objective to a model valid at every scale and
/// minimizes the model.
pub fn solve_huber(a: &RowMatrix, b: &[f64], eps: f64, seed: u64) -> Result<HuberSolution> {
    let m = a.rows() as f64;
    if !(eps > 1.0 / m && eps < 0.5) {
        return Err(Error::config(format!(
            "Huber regression needs 1/m < eps < 1/2, got eps={eps} with m={m}"
        )));
    }
    let inst = ProblemInstance::new(a.clone(), Some(b.to_vec()), LossFamily::huber())?;
    let cfg = SparsifyConfig::new(eps, 0.5, 8.0 * m * m * m, seed);
    let model = huber_sparsify(&inst, &cfg)?;
    let sparse = model.to_instance(&inst)?;
    let weights = vec![1.0; sparse.rows()];
    let linear = vec![0.0; a.cols()];
    let problem = OracleProblem {
        instance: &sparse,
        weights: &weights,
        linear: &linear,
    };
    let out = glm_oracle(&problem, &linear, ORACLE_EPS)?;
    Ok(HuberSolution {
        objective: inst.objective(&out.x),
        sparse_objective: out.value,
        oracle_iterations: out.iterations,
        oracle_stop: out.stop,
        x: out.x,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_system_recovers_planted_point() {
        let rows: Vec<Vec<f64>> = (0..64)
            .map(|i| vec![1.0, (i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let a = RowMatrix::from_rows(&rows).unwrap();
        let x0 = [0.5, -2.0, 3.0];
        let b = a.matvec(&x0);
        let s = solve_huber(&a, &b, 0.25, 3).unwrap();
        assert!(s.objective < 1e-12, "{}", s.objective);
        for (u, v) in s.x.iter().zip(x0) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn eps_below_one_over_m_rejected() {
        let a = RowMatrix::identity(4);
        assert!(matches!(
            solve_huber(&a, &[1.0; 4], 1.0 / 8.0, 0),
            Err(Error::Config(_))
        ));
    }
}
