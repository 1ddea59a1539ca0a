//! Starting weights for the top scale via a small quadratic perturbation.

use crate::error::{Error, Result};
use crate::linalg::{leverage_auto, RowMatrix};
use crate::losses::LossFamily;

const BISECTION_STEPS: usize = 200;

/// Output of [`initial_weights`].
#[derive(Debug, Clone)]
pub struct InitialWeights {
    /// Starting weights `w°` for the top scale.
    pub weights: Vec<f64>,
    /// `f̂_i(z) = f_i(z) + s_max w_i z²`.
    pub perturbed: LossFamily,
    /// Bound on `d(φ_{s_max}(w°), w°)` for the perturbed family.
    pub beta: f64,
    /// Per-term `ẑ_i` with `γ s_max <= f_i(ẑ_i) <= s_max`.
    pub z_hat: Vec<f64>,
    /// The `δ` used to scale the perturbation.
    pub delta: f64,
}

/// Finds `z > 0` with `gamma·level <= f_i(z) <= level`.
fn level_crossing(family: &LossFamily, i: usize, level: f64, gamma: f64) -> Result<f64> {
    let f = |z: f64| family.value(i, z);
    let inside = |v: f64| v >= gamma * level && v <= level;
    let mut z = 1.0f64;
    let v = f(z);
    if inside(v) {
        return Ok(z);
    }
    let (mut lo, mut hi);
    if v > level {
        hi = z;
        loop {
            z *= 0.5;
            if z < 1e-300 {
                return Err(Error::DegenerateLoss { term: i, arg: z });
            }
            let v = f(z);
            if inside(v) {
                return Ok(z);
            }
            if v < gamma * level {
                lo = z;
                break;
            }
            hi = z;
        }
    } else {
        lo = z;
        loop {
            z *= 2.0;
            if z > 1e300 {
                return Err(Error::ThresholdNotAttained {
                    term: i,
                    level: gamma * level,
                });
            }
            let v = f(z);
            if inside(v) {
                return Ok(z);
            }
            if v > level {
                hi = z;
                break;
            }
            lo = z;
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if inside(v) {
            return Ok(mid);
        }
        if v < gamma * level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::ThresholdNotAttained {
        term: i,
        level: gamma * level,
    })
}

/// Perturbation size that keeps `F̂ - F <= ε s_min / m` wherever `F <= s_max`.
pub fn default_perturbation(
    family: &LossFamily,
    m: usize,
    eps: f64,
    s_min: f64,
    s_max: f64,
    gamma: f64,
) -> f64 {
    let k = family.constants();
    let mf = m as f64;
    let growth = (k.lip / (gamma * k.c)).powf(2.0 / k.theta.max(1e-12));
    eps * s_min / (2.0 * mf * mf * mf * s_max * growth)
}

/// Computes `ẑ_i`, the perturbed family and starting weights `w_i = δ / τ̃_i`
/// with `τ̃_i ≈ a_iᵀ U⁻¹ a_i`, `U = Σ ẑ_i⁻² a_i a_iᵀ`.
pub fn initial_weights(
    a: &RowMatrix,
    family: &LossFamily,
    s_max: f64,
    gamma: f64,
    delta: f64,
    seed: u64,
) -> Result<InitialWeights> {
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::config(format!(
            "s_max must be positive and finite, got {s_max}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::config(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::config(format!(
            "perturbation delta must be positive, got {delta}"
        )));
    }
    let m = a.rows();
    let z_hat = (0..m)
        .map(|i| level_crossing(family, i, s_max, gamma))
        .collect::<Result<Vec<f64>>>()?;
    let u: Vec<f64> = z_hat.iter().map(|z| 1.0 / (z * z)).collect();
    let lev = leverage_auto(a, &u, 1.0 / 3.0, seed)?;
    let weights: Vec<f64> = lev.tau.iter().map(|t| delta / t).collect();
    let perturbed = family.perturbed(s_max, weights.clone());
    let k = family.constants();
    let ratio = k.lip / k.c;
    let beta = (1.0 + 128.0 * m as f64 * ratio * ratio / delta).ln();
    Ok(InitialWeights {
        weights,
        perturbed,
        beta,
        z_hat,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_for_power() {
        let f = LossFamily::power(1.5).unwrap();
        let z = level_crossing(&f, 0, 1.0, 0.5).unwrap();
        assert!(z >= 0.5f64.powf(1.0 / 1.5) && z <= 1.0);
        let z = level_crossing(&f, 0, 1e6, 0.5).unwrap();
        let v = f.value(0, z);
        assert!((5e5..=1e6).contains(&v));
        let z = level_crossing(&f, 0, 1e-9, 0.5).unwrap();
        let v = f.value(0, z);
        assert!((5e-10..=1e-9).contains(&v));
    }

    #[test]
    fn tukey_never_reaches_large_levels() {
        let r = level_crossing(&LossFamily::tukey(), 0, 10.0, 0.5);
        assert!(matches!(r, Err(Error::ThresholdNotAttained { .. })));
        let a = RowMatrix::identity(2);
        assert!(initial_weights(&a, &LossFamily::tukey(), 10.0, 0.5, 1e-3, 1).is_err());
    }

    #[test]
    fn weights_scale_with_delta() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let f = LossFamily::huber();
        let x = initial_weights(&a, &f, 100.0, 0.5, 1e-3, 1).unwrap();
        let y = initial_weights(&a, &f, 100.0, 0.5, 2e-3, 1).unwrap();
        for (u, v) in x.weights.iter().zip(&y.weights) {
            assert!((v / u - 2.0).abs() < 1e-12);
        }
        assert!(x.perturbed.boost().is_some());
    }
}
