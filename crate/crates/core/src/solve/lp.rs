//! `ℓ_p` regression and its dual.

use serde::{Deserialize, Serialize};

use super::{solve_glm, RefinementConfig, SolveReport, Termination};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{dot, gram, norm2, RowMatrix};
use crate::losses::LossFamily;

/// Gaps below this multiple of `F(0)` are treated as converged.
const ABS_FLOOR: f64 = 1e-30;
const MAX_ESCALATIONS: usize = 6;
const CONSTRAINT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-10;

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Unsupported(format!(
            "l_p regression needs p in (1, 2], got {p}"
        )));
    }
    Ok(())
}

fn refine(instance: &ProblemInstance, x0: &[f64], rel_tol: f64, seed: u64) -> Result<SolveReport> {
    let gamma = instance.objective(x0);
    let mut cfg = RefinementConfig::for_family(
        instance.loss(),
        gamma.max(f64::MIN_POSITIVE),
        ABS_FLOOR * gamma,
    )?;
    cfg.rel_tol = Some(rel_tol);
    cfg.seed = seed;
    solve_glm(instance, x0, &cfg)
}

/// Minimizes `‖Ax - b‖_p^p` to relative accuracy `eps`, certified by the
/// duality gap.
pub fn solve_lp(a: &RowMatrix, b: &[f64], p: f64, eps: f64, seed: u64) -> Result<SolveReport> {
    check_p(p)?;
    if !(eps > 0.0) {
        return Err(Error::config(format!(
            "accuracy must be positive, got {eps}"
        )));
    }
    let inst = ProblemInstance::new(a.clone(), Some(b.to_vec()), LossFamily::power(p)?)?;
    let x0 = vec![0.0; a.cols()];
    if inst.objective(&x0) == 0.0 {
        let cfg = RefinementConfig::for_family(inst.loss(), 1.0, 1.0)?;
        return Ok(SolveReport {
            x: x0,
            objective: 0.0,
            gap: 0.0,
            lower_bound: 0.0,
            eta: cfg.eta,
            alpha: cfg.alpha,
            tau: 1,
            iterations: 0,
            accepted_steps: 0,
            termination: Termination::StartAccepted,
            trace: vec![],
        });
    }
    refine(&inst, &x0, eps, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    /// `Aᵀy = c` with `‖y‖_q` near minimal.
    pub y: Vec<f64>,
    /// `‖y‖_q^q`.
    pub objective: f64,
    /// Normalized primal point, `⟨c, x̄⟩ = 1`.
    pub x_bar: Vec<f64>,
    /// Final penalty constant `K`.
    pub penalty: f64,
    pub escalations: usize,
    /// `|⟨c, x⟩ - 1|` of the penalized solution before normalization.
    pub constraint_error: f64,
    /// `‖Aᵀy - c‖₂ / ‖c‖₂`.
    pub feasibility_residual: f64,
    /// Accuracy requested from the primal solve.
    pub primal_eps: f64,
    pub primal: SolveReport,
}

fn project_onto_constraint(a: &RowMatrix, y: &mut [f64], c: &[f64]) -> Result<()> {
    let g = gram(a, &vec![1.0; a.rows()])?;
    for _ in 0..2 {
        let aty = a.tmatvec(y);
        let r: Vec<f64> = aty.iter().zip(c).map(|(u, v)| u - v).collect();
        let corr = a.matvec(&g.solve(&r));
        for (yi, ci) in y.iter_mut().zip(&corr) {
            *yi -= ci;
        }
    }
    Ok(())
}

/// Minimizes `‖y‖_q` subject to `Aᵀy = c` through the penalized primal
/// `K|⟨c,x⟩ - 1|^p + ‖Ax‖_p^p` with `p = q/(q-1)`.
pub fn solve_lp_dual(
    a: &RowMatrix,
    c: &[f64],
    q: f64,
    eps: f64,
    seed: u64,
) -> Result<DualSolution> {
    if !(q >= 2.0 && q.is_finite()) {
        return Err(Error::Unsupported(format!(
            "dual regression needs q in [2, inf), got {q}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::config(format!(
            "accuracy must be positive, got {eps}"
        )));
    }
    if c.len() != a.cols() {
        return Err(Error::Dimension(format!(
            "c has length {} for {} columns",
            c.len(),
            a.cols()
        )));
    }
    let cn = norm2(c);
    if cn == 0.0 {
        return Err(Error::config("c must be nonzero"));
    }
    let p = q / (q - 1.0);
    let m = a.rows() as f64;
    let primal_eps = (eps * m.powf(1.0 / q - 0.5)).powf(2.0 * q / p).max(1e-14);

    let mut penalty = 10.0 * a.norm_estimate().max(f64::MIN_POSITIVE);
    let mut x0 = vec![0.0; a.cols()];
    let mut escalations = 0;
    let (x, report, constraint_error) = loop {
        let k = penalty.powf(1.0 / p);
        let kc: Vec<f64> = c.iter().map(|v| v * k).collect();
        let aug = a.with_row(&kc)?;
        let mut shift = vec![0.0; a.rows()];
        shift.push(k);
        let inst = ProblemInstance::new(aug, Some(shift), LossFamily::power(p)?)?;
        let report = refine(&inst, &x0, primal_eps, seed)?;
        let s = dot(c, &report.x);
        let err = (s - 1.0).abs();
        if err <= CONSTRAINT_TOL || escalations == MAX_ESCALATIONS {
            break (report.x.clone(), report, err);
        }
        if s.abs() > 0.0 && s.is_finite() {
            x0 = report.x.iter().map(|v| v / s).collect();
        }
        penalty *= 10.0;
        escalations += 1;
    };

    let s = dot(c, &x);
    if !(s.abs() > 0.0) {
        return Err(Error::Infeasible(
            "penalized primal solution is orthogonal to c".into(),
        ));
    }
    let x_bar: Vec<f64> = x.iter().map(|v| v / s).collect();
    let ax = a.matvec(&x_bar);
    let norm_p = ax.iter().map(|v| v.abs().powf(p)).sum::<f64>();
    if !(norm_p > 1e-300) || norm_p.powf(1.0 / p) <= 1e-12 * norm2(&x_bar) * a.norm_estimate() {
        return Err(Error::Infeasible(
            "c has a component outside the row space of A".into(),
        ));
    }
    let mut y: Vec<f64> = ax
        .iter()
        .map(|v| v.signum() * v.abs().powf(p - 1.0) / norm_p)
        .collect();
    project_onto_constraint(a, &mut y, c)?;
    let aty = a.tmatvec(&y);
    let res = aty
        .iter()
        .zip(c)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
        / cn;
    if !(res <= FEASIBILITY_TOL) {
        return Err(Error::Infeasible(format!(
            "c is not in the range of A^T (residual {res:.3e})"
        )));
    }
    let objective = y.iter().map(|v| v.abs().powf(q)).sum();
    Ok(DualSolution {
        y,
        objective,
        x_bar,
        penalty,
        escalations,
        constraint_error,
        feasibility_residual: res,
        primal_eps,
        primal: report,
    })
}
