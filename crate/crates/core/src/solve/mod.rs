//! Iterative refinement for convex GLMs.
//!
//! Each step centres divergence surrogates at the current residuals,
//! sparsifies their sum, and hands the sparse refinement problem to a damped
//! Newton oracle. The step along the returned direction is accepted only if
//! `F` does not increase.

mod gap;
mod huber;
mod lp;
mod oracle;

pub use gap::{conjugate, gamma_conjugate, DualCertifier, GapCertificate};
pub use huber::{solve_huber, HuberSolution};
pub use lp::{solve_lp, solve_lp_dual, DualSolution};
pub use oracle::{glm_oracle, OracleProblem, OracleResult, OracleStop, ORACLE_MAX_ITER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{dot, norm2};
use crate::losses::{divergence_surrogate, surrogate_calibration, LossFamily, Thresholds};
use crate::rng::StreamSeed;
use crate::sparsify::{sparsify, AuditConfig, SparsifyConfig};

/// Smallest surrogate threshold; a zero residual of a pure power loss would
/// otherwise give a zero threshold.
const THRESHOLD_FLOOR: f64 = 1e-150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    /// Surrogate sandwich constant: `r <= D <= α r`.
    pub alpha: f64,
    /// Lower homogeneity exponent of the surrogate (`f`-level).
    pub theta: f64,
    pub c: f64,
    /// `(10α²/c)^(-1/(θ-1))`.
    pub eta: f64,
    /// Upper bound on the initial error.
    pub gamma: f64,
    /// Target error.
    pub delta: f64,
    /// `⌈2η⁻¹ ln(Γ/δ)⌉`.
    pub tau: usize,
    /// Also stop once the gap is below `rel_tol` times the best lower bound on `F*`.
    pub rel_tol: Option<f64>,
    /// Search the step length along `Δ̂` instead of always using `η`.
    pub line_search: bool,
    /// Sparsify the surrogate sum; otherwise every term is kept.
    pub sparsify: bool,
    /// Value range of each sparsifier is `[Γ̃ m^-k, Γ̃ m^k]` for this `k`.
    pub range_exponent: i32,
    /// Cap on refinement steps below `τ`.
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl RefinementConfig {
    pub fn new(alpha: f64, theta: f64, c: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(theta > 1.0) {
            return Err(Error::config(format!(
                "refinement needs theta > 1, got {theta}"
            )));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) || !(c > 0.0 && c <= 1.0) {
            return Err(Error::config(format!(
                "need alpha >= 1 and c in (0, 1], got alpha={alpha}, c={c}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !(delta > 0.0) {
            return Err(Error::config(format!(
                "need Gamma > 0 and delta > 0, got {gamma}, {delta}"
            )));
        }
        let eta = (10.0 * alpha * alpha / c)
            .powf(-1.0 / (theta - 1.0))
            .min(1.0);
        let tau = if delta >= gamma {
            1
        } else {
            (2.0 / eta * (gamma / delta).ln()).ceil().max(1.0) as usize
        };
        Ok(RefinementConfig {
            alpha,
            theta,
            c,
            eta,
            gamma,
            delta,
            tau,
            rel_tol: None,
            line_search: true,
            sparsify: true,
            range_exponent: 3,
            max_steps: None,
            seed: 0,
        })
    }

    /// Constants from the calibrated divergence surrogate of `family`.
    pub fn for_family(family: &LossFamily, gamma: f64, delta: f64) -> Result<Self> {
        let cal = surrogate_calibration(family)?;
        let p = family.p().expect("calibrated families have an exponent");
        Self::new(cal.alpha, p, 1.0, gamma, delta)
    }

    fn step_cap(&self) -> usize {
        self.max_steps.map_or(self.tau, |m| m.min(self.tau))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iter: usize,
    /// `F` after the step.
    pub objective: f64,
    pub accepted: bool,
    /// Multiple of `Δ̂` taken; zero when rejected.
    pub step: f64,
    pub gamma_tilde: f64,
    /// Duality gap before the step.
    pub gap: f64,
    pub support: usize,
    pub samples: usize,
    pub dense_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_error: Option<f64>,
    pub oracle_iterations: usize,
    pub oracle_decrement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `δ >= Γ`: the start point already meets the target.
    StartAccepted,
    /// Gap certificate at or below the target.
    GapBelowTarget,
    /// `τ` (or the step cap) reached.
    IterationCap,
    /// Three consecutive steps rejected by the descent guard.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Final duality gap, an upper bound on `F(x) - F*`.
    pub gap: f64,
    /// Best certified lower bound on `F*`.
    pub lower_bound: f64,
    pub eta: f64,
    pub alpha: f64,
    pub tau: usize,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub termination: Termination,
    pub trace: Vec<TraceStep>,
}

/// Surrogates `r_{i,y_i}` as a gamma family with per-term thresholds and scales.
fn surrogate_family(loss: &LossFamily, residuals: &[f64]) -> Result<LossFamily> {
    let p = loss
        .p()
        .ok_or_else(|| Error::Unsupported("refinement needs a power or gamma loss".into()))?;
    let mut thresholds = Vec::with_capacity(residuals.len());
    let mut scales = Vec::with_capacity(residuals.len());
    for (i, &y) in residuals.iter().enumerate() {
        let s = divergence_surrogate(loss, i, y)?;
        thresholds.push(s.threshold.max(THRESHOLD_FLOOR));
        scales.push(s.kappa);
    }
    Ok(LossFamily::gamma_with(p, Thresholds::PerTerm(thresholds))?.scaled(scales))
}

fn solver_audit(seed: u64) -> AuditConfig {
    AuditConfig {
        gaussian_dirs: 16,
        coordinate_dirs: true,
        max_row_dirs: 32,
        n_scales: 12,
        seed,
    }
}

/// Rows and weights of the sparsified surrogate sum, or every row when
/// sparsification is off or fails its audit.
struct Selection {
    indices: Vec<usize>,
    weights: Vec<f64>,
    samples: usize,
    dense: bool,
    reason: Option<String>,
    audit_error: Option<f64>,
}

fn select_terms(
    instance: &ProblemInstance,
    residuals: &[f64],
    gamma_tilde: f64,
    cfg: &RefinementConfig,
    seed: u64,
) -> Result<Selection> {
    let m = instance.rows();
    let dense = |reason: Option<String>, audit_error| Selection {
        indices: (0..m).collect(),
        weights: vec![1.0; m],
        samples: m,
        dense: true,
        reason,
        audit_error,
    };
    if !cfg.sparsify {
        return Ok(dense(None, None));
    }
    let r_family = surrogate_family(instance.loss(), residuals)?;
    let r_inst = ProblemInstance::new(instance.matrix().clone(), None, r_family)?;
    let span = (m.max(2) as f64).powi(cfg.range_exponent);
    let mut scfg = SparsifyConfig::new(0.1, gamma_tilde / span, gamma_tilde * span, seed);
    scfg.audit_cfg = solver_audit(seed);
    match sparsify(&r_inst, &scfg) {
        Ok(model) => {
            let err = model.stats.audit_max_error;
            if err.is_some_and(|e| e > 0.1) {
                return Ok(dense(Some("sparsifier audit above 1/10".into()), err));
            }
            Ok(Selection {
                samples: model.stats.samples,
                indices: model.indices,
                weights: model.weights,
                dense: false,
                reason: None,
                audit_error: err,
            })
        }
        Err(e) => Ok(dense(Some(e.to_string()), None)),
    }
}

/// Minimizer over `t >= 0` of a convex function with derivative `dphi`:
/// doubles `t` from 1 until the slope turns nonnegative, then runs
/// Illinois regula falsi on the slope.
fn line_minimum(dphi: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut dlo) = (0.0, dphi(0.0));
    if !(dlo < 0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    let mut dhi = dphi(hi);
    for _ in 0..60 {
        if !(dhi < 0.0) {
            break;
        }
        lo = hi;
        dlo = dhi;
        hi *= 2.0;
        dhi = dphi(hi);
    }
    if dhi < 0.0 {
        return hi;
    }
    let mut side = 0;
    for _ in 0..100 {
        let t = if dhi > dlo {
            lo - dlo * (hi - lo) / (dhi - dlo)
        } else {
            0.5 * (lo + hi)
        };
        let t = if t > lo && t < hi { t } else { 0.5 * (lo + hi) };
        let d = dphi(t);
        if d == 0.0 {
            return t;
        }
        if d < 0.0 {
            lo = t;
            dlo = d;
            if side == -1 {
                dhi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            dhi = d;
            if side == 1 {
                dlo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    if dhi.abs() < dlo.abs() {
        hi
    } else {
        lo
    }
}

/// One refinement step from `x` with error estimate `gamma_tilde`.
pub fn glm_iterate(
    instance: &ProblemInstance,
    x: &[f64],
    gamma_tilde: f64,
    cfg: &RefinementConfig,
    seed: u64,
) -> Result<(Vec<f64>, TraceStep)> {
    let loss = instance.loss();
    let a = instance.matrix();
    let fx = instance.objective(x);
    let y = instance.residuals(x);
    let fprime = y
        .iter()
        .enumerate()
        .map(|(i, &z)| loss.deriv(i, z))
        .collect::<Result<Vec<f64>>>()?;
    let grad = a.tmatvec(&fprime);

    let sel = select_terms(instance, &y, gamma_tilde, cfg, seed)?;
    // h(Δ) = ⟨g, Δ⟩ + (2/3α) Σ w_k D_{y_k}(⟨a_k, Δ⟩) as a GLM in Δ:
    // terms f_k(⟨a_k, Δ⟩ + y_k) plus a linear correction.
    let scale = 2.0 / (3.0 * cfg.alpha);
    let w: Vec<f64> = sel.weights.iter().map(|v| v * scale).collect();
    let sub_a = a.select_rows(&sel.indices);
    let shift: Vec<f64> = sel.indices.iter().map(|&i| -y[i]).collect();
    let sub = ProblemInstance::new(sub_a, Some(shift), loss.restrict(&sel.indices))?;
    let dvec: Vec<f64> = sel
        .indices
        .iter()
        .zip(&w)
        .map(|(&i, wk)| wk * fprime[i])
        .collect();
    let corr = sub.matrix().tmatvec(&dvec);
    let linear: Vec<f64> = grad.iter().zip(&corr).map(|(g, c)| g - c).collect();
    let problem = OracleProblem {
        instance: &sub,
        weights: &w,
        linear: &linear,
    };
    let eps_or = cfg.eta / (30.0 * cfg.alpha);
    let out = glm_oracle(&problem, &vec![0.0; x.len()], eps_or)?;
    let dir = out.x;

    let at = |t: f64| -> Vec<f64> { x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect() };
    let mut step = cfg.eta;
    let mut cand = at(step);
    let mut fc = instance.objective(&cand);
    if cfg.line_search && norm2(&dir) > 0.0 {
        let ad = a.matvec(&dir);
        let t = line_minimum(|t| {
            let terms = y
                .iter()
                .zip(&ad)
                .enumerate()
                .map(|(i, (yi, di))| loss.deriv(i, yi + t * di).map_or(f64::NAN, |d| d * di));
            terms.sum()
        });
        let xt = at(t);
        let ft = instance.objective(&xt);
        if ft < fc {
            step = t;
            cand = xt;
            fc = ft;
        }
    }
    let accepted = fc <= fx && dot(&dir, &dir) > 0.0;
    let trace = TraceStep {
        iter: 0,
        objective: if accepted { fc } else { fx },
        accepted,
        step: if accepted { step } else { 0.0 },
        gamma_tilde,
        gap: f64::NAN,
        support: sel.indices.len(),
        samples: sel.samples,
        dense_fallback: sel.dense && cfg.sparsify,
        fallback_reason: sel.reason,
        audit_error: sel.audit_error,
        oracle_iterations: out.iterations,
        oracle_decrement: out.decrement,
    };
    Ok((if accepted { cand } else { x.to_vec() }, trace))
}

/// Runs refinement steps from `x0` until the duality gap is at most `δ`
/// (or `rel_tol` times the certified lower bound), for at most `τ` steps.
/// The error estimate at step `T` is `min((1 - η/2)^T Γ, gap)`.
pub fn solve_glm(
    instance: &ProblemInstance,
    x0: &[f64],
    cfg: &RefinementConfig,
) -> Result<SolveReport> {
    if x0.len() != instance.cols() {
        return Err(Error::Dimension(format!(
            "start point has length {} in dimension {}",
            x0.len(),
            instance.cols()
        )));
    }
    if !instance.loss().is_convex() {
        return Err(Error::config("refinement needs convex losses"));
    }
    surrogate_calibration(instance.loss())?;
    let cert = DualCertifier::new(instance)?;
    let root = StreamSeed::new(cfg.seed);
    let mut x = x0.to_vec();
    let first = cert.certify(instance, &x)?;
    let mut report = SolveReport {
        x: vec![],
        objective: first.primal,
        gap: first.gap,
        lower_bound: first.dual,
        eta: cfg.eta,
        alpha: cfg.alpha,
        tau: cfg.tau,
        iterations: 0,
        accepted_steps: 0,
        termination: Termination::IterationCap,
        trace: vec![],
    };
    if cfg.delta >= cfg.gamma {
        report.x = x;
        report.termination = Termination::StartAccepted;
        return Ok(report);
    }
    let mut rejected_run = 0;
    let mut g = first;
    for t in 0..cfg.step_cap() {
        report.lower_bound = report.lower_bound.max(g.dual);
        let rel_ok = cfg
            .rel_tol
            .is_some_and(|r| report.lower_bound > 0.0 && g.gap <= r * report.lower_bound);
        if g.gap <= cfg.delta || rel_ok {
            report.termination = Termination::GapBelowTarget;
            break;
        }
        let scheduled = (1.0 - cfg.eta / 2.0).powi(t as i32) * cfg.gamma;
        let gamma_tilde = scheduled.min(g.gap);
        let (next, mut step) = glm_iterate(instance, &x, gamma_tilde, cfg, root.child(t as u64).0)?;
        step.iter = t;
        step.gap = g.gap;
        report.iterations = t + 1;
        if step.accepted {
            report.accepted_steps += 1;
            rejected_run = 0;
        } else {
            rejected_run += 1;
        }
        report.trace.push(step);
        x = next;
        g = cert.certify(instance, &x)?;
        if rejected_run >= 3 {
            report.termination = Termination::Stalled;
            break;
        }
    }
    report.lower_bound = report.lower_bound.max(g.dual);
    if report.termination == Termination::IterationCap {
        let rel_ok = cfg
            .rel_tol
            .is_some_and(|r| report.lower_bound > 0.0 && g.gap <= r * report.lower_bound);
        if g.gap <= cfg.delta || rel_ok {
            report.termination = Termination::GapBelowTarget;
        }
    }
    report.objective = g.primal;
    report.gap = g.gap;
    report.x = x;
    Ok(report)
}
