//! Divergence surrogates `r(Δ) = κ·γ_p(β·max(|z0|, t), Δ)`.
//!
//! The Bregman divergence of `|z|^p` and of `γ_p(t, ·)` is equivalent up to a
//! p-dependent constant to a `γ_p` centred at the current residual. The
//! constant is not known in closed form, so `(κ, β)` are calibrated once per
//! `(kind, p)` on a dense grid and the measured ratio spread is reported as α.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::{gamma_p, LossFamily, LossKind};
use crate::error::{Error, Result};

/// Calibrated constants of the surrogate for one `(kind, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateCalibration {
    /// Threshold stretch `β`.
    pub beta: f64,
    /// Scale `κ` so that `r <= D`.
    pub kappa: f64,
    /// Sandwich constant: `D <= α r`.
    pub alpha: f64,
}

/// `r(Δ) = κ·γ_p(T, Δ)` approximating `D_{z0}(z0 + Δ)` within `[r, α r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSurrogate {
    pub center: f64,
    /// The `γ_p` threshold `T = β·max(|z0|, t)`.
    pub threshold: f64,
    pub p: f64,
    pub kappa: f64,
    pub alpha: f64,
    /// Lower homogeneity exponent of `r` (f-level): `r(λΔ) >= c λ^θ r(Δ)` for `λ >= 1`.
    pub theta: f64,
    pub c: f64,
    pub lip: f64,
}

impl DivergenceSurrogate {
    #[inline]
    pub fn eval(&self, delta: f64) -> f64 {
        self.kappa * gamma_p(self.p, self.threshold, delta)
    }

    #[inline]
    pub fn deriv(&self, delta: f64) -> f64 {
        let (p, t, a) = (self.p, self.threshold, delta.abs());
        let g = if t > 0.0 && a <= t {
            p * t.powf(p - 2.0) * delta
        } else if a == 0.0 {
            0.0
        } else {
            p * a.powf(p - 1.0) * delta.signum()
        };
        self.kappa * g
    }

    #[inline]
    pub fn second(&self, delta: f64) -> f64 {
        let (p, t, a) = (self.p, self.threshold, delta.abs());
        let h = if t > 0.0 && a <= t {
            p * t.powf(p - 2.0)
        } else if a == 0.0 {
            if p == 2.0 {
                2.0
            } else {
                f64::INFINITY
            }
        } else {
            p * (p - 1.0) * a.powf(p - 2.0)
        };
        self.kappa * h
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Shape {
    Power,
    Gamma,
}

fn cache() -> &'static Mutex<HashMap<(Shape, u64), SurrogateCalibration>> {
    static CACHE: OnceLock<Mutex<HashMap<(Shape, u64), SurrogateCalibration>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn shape_of(family: &LossFamily) -> Result<(Shape, f64)> {
    if family.boost().is_some() {
        return Err(Error::Unsupported(
            "divergence surrogate of a perturbed loss".into(),
        ));
    }
    let (shape, p) = match family.kind() {
        LossKind::Power { p } => (Shape::Power, *p),
        LossKind::Gamma { p } => (Shape::Gamma, *p),
        _ => {
            return Err(Error::Unsupported(
                "divergence surrogates exist for power and gamma losses only".into(),
            ))
        }
    };
    if p <= 1.0 {
        return Err(Error::Unsupported(format!(
            "refinement needs p > 1, got {p}"
        )));
    }
    Ok((shape, p))
}

/// Divergence of the unit-threshold loss, evaluated directly.
fn unit_divergence(shape: Shape, p: f64, z0: f64, d: f64) -> f64 {
    let t = match shape {
        Shape::Power => 0.0,
        Shape::Gamma => 1.0,
    };
    let a = z0.abs();
    let g = if t > 0.0 && a <= t {
        p * z0
    } else if a == 0.0 {
        0.0
    } else {
        p * a.powf(p - 1.0) * z0.signum()
    };
    (gamma_p(p, t, z0 + d) - gamma_p(p, t, z0) - g * d).max(0.0)
}

/// Centres and offsets on which the ratio `D / γ_p(T, Δ)` is sampled.
fn calibration_points(shape: Shape) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let offsets = |z0: f64, scale: f64, pts: &mut Vec<(f64, f64)>| {
        for k in -80..=240 {
            let s = scale * 2f64.powf(k as f64 / 8.0);
            pts.push((z0, s));
            pts.push((z0, -s));
        }
        let lo = -3.0 * z0.abs() - 2.0 * scale;
        let hi = z0.abs() + 2.0 * scale;
        for k in 0..=400 {
            let d = lo + (hi - lo) * k as f64 / 400.0;
            if d.abs() > 1e-3 * scale {
                pts.push((z0, d));
            }
        }
    };
    match shape {
        Shape::Power => {
            offsets(1.0, 1.0, &mut pts);
            pts.push((0.0, 1.0));
        }
        Shape::Gamma => {
            offsets(0.0, 1.0, &mut pts);
            for k in -32..=48 {
                let z0 = 2f64.powf(k as f64 / 4.0);
                offsets(z0, z0.max(1.0), &mut pts);
            }
            offsets(1.0 - 1e-9, 1.0, &mut pts);
            offsets(1.0 + 1e-9, 1.0, &mut pts);
        }
    }
    pts
}

fn ratio_range(shape: Shape, p: f64, beta: f64, pts: &[(f64, f64)]) -> (f64, f64) {
    let t = match shape {
        Shape::Power => 0.0,
        Shape::Gamma => 1.0,
    };
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &(z0, d) in pts {
        let r = gamma_p(p, beta * z0.abs().max(t), d);
        if r <= 0.0 {
            continue;
        }
        let q = unit_divergence(shape, p, z0, d) / r;
        lo = lo.min(q);
        hi = hi.max(q);
    }
    (lo, hi)
}

fn calibrate(shape: Shape, p: f64) -> SurrogateCalibration {
    let pts = calibration_points(shape);
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..=60 {
        let beta = 1.0 + 0.05 * k as f64;
        let (lo, hi) = ratio_range(shape, p, beta, &pts);
        let spread = hi / lo;
        if best.is_none_or(|(_, _, s)| spread < s) {
            best = Some((beta, lo, spread));
        }
    }
    let (beta, lo, spread) = best.expect("nonempty search");
    // Sampling between grid points can miss a sliver of the extremes.
    let margin = 1.0 + 1e-9 + 0.02 * spread.ln();
    SurrogateCalibration {
        beta,
        kappa: lo / margin,
        alpha: spread * margin * margin,
    }
}

/// Calibration for the family's shape and exponent, computed once per process.
pub fn surrogate_calibration(family: &LossFamily) -> Result<SurrogateCalibration> {
    let (shape, p) = shape_of(family)?;
    let key = (shape, p.to_bits());
    if let Some(c) = cache().lock().expect("calibration cache").get(&key) {
        return Ok(*c);
    }
    let c = calibrate(shape, p);
    cache().lock().expect("calibration cache").insert(key, c);
    Ok(c)
}

/// Surrogate for the divergence of term `i` around residual `z0`.
pub fn divergence_surrogate(family: &LossFamily, i: usize, z0: f64) -> Result<DivergenceSurrogate> {
    if !z0.is_finite() {
        return Err(Error::Domain(format!(
            "surrogate centre must be finite, got {z0}"
        )));
    }
    let (_, p) = shape_of(family)?;
    let cal = surrogate_calibration(family)?;
    let threshold = cal.beta * z0.abs().max(family.threshold(i));
    Ok(DivergenceSurrogate {
        center: z0,
        threshold,
        p,
        kappa: cal.kappa * family.scale_of(i),
        alpha: cal.alpha,
        theta: p,
        c: 1.0,
        lip: 1.0,
    })
}
