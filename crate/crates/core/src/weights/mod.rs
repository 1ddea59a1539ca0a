//! Approximate weights at dyadic scales.
//!
//! At scale `s` a weight vector `w` is α-approximate when
//! `f_i(sqrt(τ_i(w))) / (w_i τ_i(w))` lies in `[s/α, α s]` for every term,
//! with `τ_i(w) = a_iᵀ (AᵀWA)⁺ a_i`. Such weights are fixed points of
//! [`phi`] up to `log α` in the log-ratio metric.

mod initial;

pub use initial::{default_perturbation, initial_weights, InitialWeights};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{leverage_auto, leverage_exact, Leverage, RowMatrix};
use crate::losses::LossFamily;
use crate::par;
use crate::rng::StreamSeed;

/// `max_i |log(u_i / w_i)|`; infinite when the zero patterns differ.
pub fn log_ratio_distance(u: &[f64], w: &[f64]) -> f64 {
    assert_eq!(
        u.len(),
        w.len(),
        "distance between vectors of different length"
    );
    let mut d = 0.0f64;
    for (&x, &y) in u.iter().zip(w) {
        if x == 0.0 && y == 0.0 {
            continue;
        }
        if x == 0.0 || y == 0.0 {
            return f64::INFINITY;
        }
        d = d.max((x / y).ln().abs());
    }
    d
}

fn phi_from_leverage(family: &LossFamily, w: &[f64], lev: &Leverage, s: f64) -> Result<Vec<f64>> {
    let out = par::map_indexed(w.len(), |i| {
        let q = if lev.exact {
            lev.tau[i]
        } else {
            lev.sigma[i] / w[i]
        };
        if !(q > 0.0) {
            return Err(Error::Internal(format!(
                "row {i} has zero leverage at positive weight"
            )));
        }
        let f = family.value(i, q.sqrt());
        if !(f > 0.0) {
            return Err(Error::DegenerateLoss {
                term: i,
                arg: q.sqrt(),
            });
        }
        Ok(f / (s * q))
    });
    out.into_iter().collect()
}

/// One step `w̄_i = f_i(sqrt(q_i)) / (s q_i)` with `q_i = σ̃_i / w_i`.
///
/// `eps = 0` uses exact leverage; otherwise leverage comes from
/// [`leverage_auto`], which sketches only when `m` is large relative to `n`.
pub fn phi(
    a: &RowMatrix,
    family: &LossFamily,
    w: &[f64],
    s: f64,
    eps: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if w.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "{} weights for {} rows",
            w.len(),
            a.rows()
        )));
    }
    if let Some(i) = w.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "weight {i} must be positive and finite, got {}",
            w[i]
        )));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {s}")));
    }
    let lev = leverage_auto(a, w, eps, seed)?;
    phi_from_leverage(family, w, &lev, s)
}

/// Weights over the dyadic scales `2^j`, `j_min <= j <= j_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub jmin: i32,
    pub jmax: i32,
    pub alpha: f64,
    /// `weights[j - jmin]` is the weight vector at scale `2^j`.
    pub weights: Vec<Vec<f64>>,
    /// `max_j σ_i(W_j^{1/2} A)`.
    pub scores: Vec<f64>,
    /// Measured `d(w^(j), φ_{2^j}(w^(j)))` per scale.
    #[serde(default)]
    pub scale_distances: Vec<f64>,
    /// Largest `w^(j+1)_i / w^(j)_i`.
    #[serde(default)]
    pub smoothness: f64,
}

impl WeightScheme {
    pub fn scale_count(&self) -> usize {
        self.weights.len()
    }

    pub fn at(&self, j: i32) -> &[f64] {
        &self.weights[(j - self.jmin) as usize]
    }

    /// `‖τ̄‖₁`.
    pub fn score_mass(&self) -> f64 {
        self.scores.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FindWeightsConfig {
    /// Sketch accuracy for in-loop leverage.
    pub eps: f64,
    pub seed: u64,
    /// Claimed `d(φ(w°), w°)`; the measured value is used when larger.
    pub beta: Option<f64>,
    /// Per-scale iteration cap after the warm-up.
    pub max_iter: usize,
    /// Per-scale stopping distance.
    pub tol: f64,
}

impl Default for FindWeightsConfig {
    fn default() -> Self {
        FindWeightsConfig {
            eps: 0.1,
            seed: 0,
            beta: None,
            max_iter: 60,
            tol: 1e-13,
        }
    }
}

/// Number of warm-up iterations needed to bring `d(φ(w), w)` from `β` down to
/// the contraction floor.
pub fn warmup_iterations(family: &LossFamily, beta: f64) -> usize {
    let k = family.constants();
    let (theta_f, c_f) = k.f_lower();
    let floor = (2.0 * k.big_c).max(2.0 / c_f).ln();
    let rate = (2.0 / (theta_f - 2.0)).abs().min((2.0 / (k.u - 2.0)).abs());
    if !rate.is_finite() || rate <= 1.0 {
        return 1;
    }
    let t = ((1.0 + beta) / floor).ln() / rate.ln();
    if t.is_finite() && t > 1.0 {
        t.ceil() as usize
    } else {
        1
    }
}

/// Upper bound on the scheme α that the iteration can guarantee, with 1% slack.
pub fn alpha_bound(family: &LossFamily) -> f64 {
    let k = family.constants();
    let delta = k.contraction_factor();
    ((2.0 * (2.0 * k.c1()).ln() + 2f64.ln()) / (1.0 - delta)).exp() * 1.01
}

/// Iterates `φ_s` from `w` until the step length drops below `tol`, stops
/// shrinking, or `max_iter` steps have run.
fn settle(
    a: &RowMatrix,
    family: &LossFamily,
    mut w: Vec<f64>,
    s: f64,
    cfg: &FindWeightsConfig,
    seed: StreamSeed,
) -> Result<Vec<f64>> {
    let mut prev = f64::INFINITY;
    for it in 0..cfg.max_iter {
        let next = phi(a, family, &w, s, cfg.eps, seed.child(it as u64).0)?;
        let d = log_ratio_distance(&next, &w);
        w = next;
        if d <= cfg.tol || d >= 0.9 * prev {
            break;
        }
        prev = d;
    }
    Ok(w)
}

/// Builds a weight scheme from the top scale down.
///
/// The top scale starts from `w0`, runs the warm-up iterations, then each
/// scale is iterated to its fixed point starting from the scale above. Every
/// scale is then audited with exact leverage and α is the worst of the
/// fixed-point residual and the adjacent-scale ratio.
pub fn find_weights(
    a: &RowMatrix,
    family: &LossFamily,
    jmin: i32,
    jmax: i32,
    w0: &[f64],
    cfg: &FindWeightsConfig,
) -> Result<WeightScheme> {
    if jmin > jmax {
        return Err(Error::config(format!("empty scale range [{jmin}, {jmax}]")));
    }
    let delta = family.constants().contraction_factor();
    if delta >= 1.0 {
        return Err(Error::NoContraction { factor: delta });
    }
    let root = StreamSeed::new(cfg.seed);
    let top = 2f64.powi(jmax);
    let first = phi(a, family, w0, top, 0.0, 0)?;
    let beta = log_ratio_distance(&first, w0).max(cfg.beta.unwrap_or(0.0));
    let mut w = first;
    for t in 1..warmup_iterations(family, beta) {
        w = phi(a, family, &w, top, cfg.eps, root.child(0x5000 + t as u64).0)?;
    }

    let count = (jmax - jmin + 1) as usize;
    let mut weights: Vec<Vec<f64>> = vec![Vec::new(); count];
    for (k, j) in (jmin..=jmax).rev().enumerate() {
        w = settle(a, family, w, 2f64.powi(j), cfg, root.child(k as u64))?;
        weights[(j - jmin) as usize] = w.clone();
    }

    let audits: Vec<(f64, Vec<f64>)> = (jmin..=jmax)
        .map(|j| {
            let wj = &weights[(j - jmin) as usize];
            let lev = leverage_exact(a, wj)?;
            let next = phi_from_leverage(family, wj, &lev, 2f64.powi(j))?;
            Ok((log_ratio_distance(&next, wj), lev.sigma))
        })
        .collect::<Result<_>>()?;
    let mut scores = vec![0.0f64; a.rows()];
    for (_, sigma) in &audits {
        for (s, v) in scores.iter_mut().zip(sigma) {
            *s = s.max(*v);
        }
    }
    let scale_distances: Vec<f64> = audits.iter().map(|(d, _)| *d).collect();
    let mut smoothness = 1.0f64;
    for k in 1..count {
        for (hi, lo) in weights[k].iter().zip(&weights[k - 1]) {
            smoothness = smoothness.max(hi / lo);
        }
    }
    let worst = scale_distances.iter().fold(0.0f64, |m, d| m.max(*d));
    let alpha = worst.exp().max(smoothness);
    let bound = alpha_bound(family);
    if alpha > bound {
        return Err(Error::AlphaTooLarge {
            measured: alpha,
            bound,
        });
    }
    Ok(WeightScheme {
        jmin,
        jmax,
        alpha,
        weights,
        scores,
        scale_distances,
        smoothness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_basics() {
        assert_eq!(log_ratio_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((log_ratio_distance(&[1.0, 2.0], &[2.0, 2.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_ratio_distance(&[0.0, 1.0], &[1.0, 1.0]), f64::INFINITY);
        assert_eq!(log_ratio_distance(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn identity_fixed_point() {
        let p = 1.5;
        let s: f64 = 8.0;
        let a = RowMatrix::identity(3);
        let w = vec![s.powf(-2.0 / p); 3];
        let out = phi(&a, &LossFamily::power(p).unwrap(), &w, s, 0.0, 0).unwrap();
        for v in out {
            assert!((v / w[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_scale_halves_output() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.3], vec![-0.2, 2.0], vec![0.5, 0.5]]).unwrap();
        let f = LossFamily::gamma(1.3, 0.7).unwrap();
        let w = [0.3, 1.2, 2.0];
        let x = phi(&a, &f, &w, 3.0, 0.0, 0).unwrap();
        let y = phi(&a, &f, &w, 6.0, 0.0, 0).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((v / u - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_ratio_is_inverse_scale() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.3], vec![-0.2, 2.0], vec![0.5, 0.5]]).unwrap();
        let out = phi(
            &a,
            &LossFamily::power(2.0).unwrap(),
            &[0.1, 5.0, 1.0],
            1.0,
            0.0,
            0,
        )
        .unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn degenerate_loss_detected() {
        use crate::losses::Constants;
        use std::sync::Arc;
        let k = Constants {
            lip: 1.0,
            theta: 1.0,
            c: 1.0,
            u: 2.0,
            big_c: 1.0,
            k: 1.0,
        };
        let flat = LossFamily::custom(
            "flat",
            Arc::new(|_, z: f64| if z.abs() < 10.0 { 0.0 } else { z * z }),
            k,
        );
        let r = phi(&RowMatrix::identity(2), &flat, &[1.0, 1.0], 1.0, 0.0, 0);
        assert!(matches!(r, Err(Error::DegenerateLoss { .. })));
    }

    #[test]
    fn warmup_counts() {
        assert_eq!(warmup_iterations(&LossFamily::power(2.0).unwrap(), 5.0), 1);
        let t = warmup_iterations(&LossFamily::power(1.0).unwrap(), 100.0);
        let want = ((101.0f64 / 2f64.ln()).ln() / 2f64.ln()).ceil() as usize;
        assert_eq!(t, want);
    }

    #[test]
    fn scheme_on_identity_matches_closed_form() {
        let p = 1.5;
        let a = RowMatrix::identity(4);
        let f = LossFamily::power(p).unwrap();
        let w0 = vec![2f64.powf(-2.0 * 4.0 / p); 4];
        let sch = find_weights(&a, &f, -4, 4, &w0, &FindWeightsConfig::default()).unwrap();
        for j in -4..=4 {
            let want = 2f64.powf(-2.0 * j as f64 / p);
            for v in sch.at(j) {
                assert!((v / want - 1.0).abs() < 1e-6, "j={j} {v} vs {want}");
            }
        }
        assert!(sch.scores.iter().all(|s| (s - 1.0).abs() < 1e-9));
    }
}
