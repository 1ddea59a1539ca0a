//! Sparse GLM oracle: damped Newton on `G(x) = ⟨y, x⟩ + Σ w_i f_i(⟨a_i, x⟩ - b_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{dot, gram, norm2};
use crate::par;

pub const ORACLE_MAX_ITER: usize = 500;
const ARMIJO: f64 = 1e-4;
const STALL_WINDOW: usize = 10;

/// The objective handed to [`glm_oracle`].
#[derive(Debug, Clone, Copy)]
pub struct OracleProblem<'a> {
    pub instance: &'a ProblemInstance,
    /// Nonnegative term weights.
    pub weights: &'a [f64],
    /// The linear term `y`.
    pub linear: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleStop {
    /// Newton decrement below the requested fraction of the progress.
    Decrement,
    /// Best value stopped improving over the stall window.
    Stalled,
    /// Zero gradient.
    Stationary,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Half the squared Newton decrement at the returned point, an estimate
    /// of `G(x) - G*`.
    pub decrement: f64,
    pub stop: OracleStop,
}

impl OracleProblem<'_> {
    fn check(&self) -> Result<()> {
        let inst = self.instance;
        if self.weights.len() != inst.rows() {
            return Err(Error::Dimension(format!(
                "{} weights for {} terms",
                self.weights.len(),
                inst.rows()
            )));
        }
        if self.linear.len() != inst.cols() {
            return Err(Error::Dimension(format!(
                "linear term has length {} in dimension {}",
                self.linear.len(),
                inst.cols()
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Domain(
                "oracle weights must be finite and nonnegative".into(),
            ));
        }
        if !inst.loss().is_convex() {
            return Err(Error::config("the GLM oracle needs convex losses"));
        }
        Ok(())
    }

    /// `G(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let inst = self.instance;
        let w = self.weights;
        dot(self.linear, x)
            + par::sum_indexed(inst.rows(), |i| {
                w[i] * inst.loss().value(i, inst.residual(i, x))
            })
    }

    fn gradient(&self, r: &[f64]) -> Result<Vec<f64>> {
        let loss = self.instance.loss();
        let d = r
            .iter()
            .enumerate()
            .map(|(i, &z)| Ok(self.weights[i] * loss.deriv(i, z)?))
            .collect::<Result<Vec<f64>>>()?;
        let mut g = self.instance.matrix().tmatvec(&d);
        for (gi, yi) in g.iter_mut().zip(self.linear) {
            *gi += yi;
        }
        Ok(g)
    }

    /// `w_i f_i''(r_i)`, with cusps replaced by the curvature at a tiny offset.
    fn curvature(&self, r: &[f64]) -> Vec<f64> {
        let loss = self.instance.loss();
        let floor = (1e-12 * r.iter().fold(0.0f64, |a, b| a.max(b.abs()))).max(1e-150);
        r.iter()
            .enumerate()
            .map(|(i, &z)| {
                let s = loss.second(i, z);
                let s = if s.is_finite() {
                    s
                } else {
                    loss.second(i, if z < 0.0 { -floor } else { floor })
                };
                if s.is_finite() {
                    self.weights[i] * s.max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Returns `x_out` with `G(x_out) - G* <= ε (G(x_in) - G*)`, certified by the
/// Newton decrement once full Newton steps are accepted.
///
/// Stops when half the squared Newton decrement drops below
/// `ε/4 · (G(x_in) - G(x) + decrement)` after a full step, or when the best
/// value improves by less than `ε/4 · (G(x_in) - G_best)` over 10 iterations.
pub fn glm_oracle(problem: &OracleProblem<'_>, x_in: &[f64], eps: f64) -> Result<OracleResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::config(format!(
            "oracle accuracy must be positive, got {eps}"
        )));
    }
    problem.check()?;
    let inst = problem.instance;
    let n = inst.cols();
    if x_in.len() != n {
        return Err(Error::Dimension(format!(
            "start point has length {} in dimension {n}",
            x_in.len()
        )));
    }
    let g_in = problem.value(x_in);
    if !g_in.is_finite() {
        return Err(Error::Domain(
            "objective is not finite at the start point".into(),
        ));
    }
    // A linear term reaching outside the span of the weighted rows decreases
    // without bound along that direction.
    let support: Vec<f64> = problem
        .weights
        .iter()
        .map(|&w| if w > 0.0 { 1.0 } else { 0.0 })
        .collect();
    let null = gram(inst.matrix(), &support)?.null_projection(problem.linear);
    let ny = norm2(problem.linear);
    if ny > 0.0 && norm2(&null) > 1e-10 * ny {
        return Err(Error::Unbounded);
    }

    let x_scale = 1.0 + norm2(x_in);
    let mut x = x_in.to_vec();
    let mut gx = g_in;
    let mut best_hist = vec![gx];
    let mut last_full = true;
    let mut decrement = f64::INFINITY;
    for it in 1..=ORACLE_MAX_ITER {
        let r = inst.residuals(&x);
        let grad = problem.gradient(&r)?;
        if grad.iter().all(|g| *g == 0.0) {
            return Ok(OracleResult {
                x,
                value: gx,
                iterations: it - 1,
                decrement: 0.0,
                stop: OracleStop::Stationary,
            });
        }
        let h = gram(inst.matrix(), &problem.curvature(&r))?;
        let tr = h.trace();
        let reg = if tr > 0.0 { 1e-12 * tr / n as f64 } else { 1.0 };
        let d: Vec<f64> = h.solve_shifted(&grad, reg).iter().map(|v| -v).collect();
        let slope = dot(&grad, &d);
        decrement = (-slope / 2.0).max(0.0);
        if last_full && decrement <= 0.25 * eps * ((g_in - gx).max(0.0) + decrement) {
            return Ok(OracleResult {
                x,
                value: gx,
                iterations: it - 1,
                decrement,
                stop: OracleStop::Decrement,
            });
        }
        if !(slope < 0.0) {
            return Ok(OracleResult {
                x,
                value: gx,
                iterations: it - 1,
                decrement,
                stop: OracleStop::Stalled,
            });
        }
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..100 {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let gc = problem.value(&cand);
            if gc.is_finite() && gc <= gx + ARMIJO * t * slope {
                next = Some((cand, gc));
                break;
            }
            t *= 0.5;
        }
        let Some((mut cand, mut gc)) = next else {
            return Ok(OracleResult {
                x,
                value: gx,
                iterations: it - 1,
                decrement,
                stop: OracleStop::Stalled,
            });
        };
        if tr == 0.0 && t == 1.0 {
            // No curvature anywhere: the gradient step has no natural length.
            for _ in 0..60 {
                t *= 2.0;
                let c2: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let g2 = problem.value(&c2);
                if !(g2.is_finite() && g2 <= gx + ARMIJO * t * slope) {
                    break;
                }
                cand = c2;
                gc = g2;
            }
            t = 1.0;
        }
        last_full = t == 1.0;
        x = cand;
        gx = gc;
        if norm2(&x) > 1e15 * x_scale {
            return Err(Error::Unbounded);
        }
        let best = best_hist.last().copied().unwrap_or(gx).min(gx);
        best_hist.push(best);
        if best_hist.len() > STALL_WINDOW {
            let old = best_hist[best_hist.len() - 1 - STALL_WINDOW];
            if old - best <= 0.25 * eps * (g_in - best).max(0.0) {
                return Ok(OracleResult {
                    x,
                    value: gx,
                    iterations: it,
                    decrement,
                    stop: OracleStop::Stalled,
                });
            }
        }
    }
    Ok(OracleResult {
        x,
        value: gx,
        iterations: ORACLE_MAX_ITER,
        decrement,
        stop: OracleStop::IterationCap,
    })
}
