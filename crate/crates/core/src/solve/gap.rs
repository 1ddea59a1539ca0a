//! Duality-gap certificates for `F(x) = Σ f_i(⟨a_i, x⟩ - b_i)`.
//!
//! For any `u` with `Aᵀu = 0`, `F* >= -Σ f_i*(u_i) - ⟨b, u⟩`. The candidate
//! `u` is `f'(Ax - b)` projected onto the null space of `Aᵀ`; at the optimum
//! the projection is the identity and the gap closes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{gram, GramFactorization};
use crate::losses::{LossFamily, LossKind};
use crate::par;

/// Convex conjugate of `|z|^p` (`t = 0`) or `γ_p(t, ·)` at `v`.
pub fn gamma_conjugate(p: f64, t: f64, v: f64) -> f64 {
    let a = v.abs();
    if t > 0.0 {
        let knee = p * t.powf(p - 1.0);
        if a <= knee {
            return a * a / (2.0 * p * t.powf(p - 2.0));
        }
        if p <= 1.0 {
            return f64::INFINITY;
        }
        return (p - 1.0) * (a / p).powf(p / (p - 1.0)) + (1.0 - 0.5 * p) * t.powf(p);
    }
    if p <= 1.0 {
        return if a <= 1.0 { 0.0 } else { f64::INFINITY };
    }
    (p - 1.0) * (a / p).powf(p / (p - 1.0))
}

/// `f_i*(v)` for power and gamma families, term scales included.
pub fn conjugate(family: &LossFamily, i: usize, v: f64) -> Result<f64> {
    if family.boost().is_some() {
        return Err(Error::Unsupported("conjugate of a perturbed loss".into()));
    }
    let (p, t) = match family.kind() {
        LossKind::Power { p } => (*p, 0.0),
        LossKind::Gamma { p } => (*p, family.threshold(i)),
        _ => {
            return Err(Error::Unsupported(
                "conjugates exist for power and gamma losses only".into(),
            ))
        }
    };
    let s = family.term_scales().map_or(1.0, |s| s[i]);
    Ok(s * gamma_conjugate(p, t, v / s))
}

/// Largest `|f_i'|`, finite only for linear-growth losses.
fn slope_bound(family: &LossFamily, i: usize) -> f64 {
    let s = family.term_scales().map_or(1.0, |s| s[i]);
    match family.kind() {
        LossKind::Gamma { p } if *p <= 1.0 => s * p * family.threshold(i).powf(p - 1.0),
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub primal: f64,
    pub dual: f64,
    /// `primal - dual >= F(x) - F*`.
    pub gap: f64,
}

/// Holds the factorization of `AᵀA` reused across certificates.
#[derive(Debug, Clone)]
pub struct DualCertifier {
    gram: GramFactorization,
}

impl DualCertifier {
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        conjugate(instance.loss(), 0, 0.0)?;
        Ok(DualCertifier {
            gram: gram(instance.matrix(), &vec![1.0; instance.rows()])?,
        })
    }

    pub fn certify(&self, instance: &ProblemInstance, x: &[f64]) -> Result<GapCertificate> {
        let loss = instance.loss();
        let a = instance.matrix();
        let r = instance.residuals(x);
        let primal = instance.objective_from_residuals(&r);
        let v = r
            .iter()
            .enumerate()
            .map(|(i, &z)| loss.deriv(i, z))
            .collect::<Result<Vec<f64>>>()?;
        let coef = self.gram.solve(&a.tmatvec(&v));
        let fit = a.matvec(&coef);
        let mut u: Vec<f64> = v.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let shrink = u
            .iter()
            .enumerate()
            .map(|(i, &ui)| {
                if ui == 0.0 {
                    1.0
                } else {
                    (slope_bound(loss, i) / ui.abs()).min(1.0)
                }
            })
            .fold(1.0f64, f64::min);
        if shrink < 1.0 {
            u.iter_mut().for_each(|ui| *ui *= shrink);
        }
        let b = instance.shift();
        let dual = -par::sum_indexed(u.len(), |i| {
            conjugate(loss, i, u[i]).expect("family checked at construction") + b[i] * u[i]
        });
        Ok(GapCertificate {
            primal,
            dual,
            gap: (primal - dual).max(0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RowMatrix;

    #[test]
    fn conjugate_matches_numeric_sup() {
        for (p, t) in [(1.5, 0.0), (2.0, 0.0), (1.3, 0.7), (1.0, 1.0), (1.8, 2.0)] {
            for v in [-2.0, -0.3, 0.0, 0.4, 0.9, 1.7] {
                let numeric = (-40000..=40000)
                    .map(|k| {
                        let z = k as f64 * 1e-3;
                        v * z - crate::losses::gamma_p(p, t, z)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let exact = gamma_conjugate(p, t, v);
                if exact.is_finite() {
                    assert!(
                        (numeric - exact).abs() < 1e-5 * (1.0 + exact.abs()),
                        "p={p} t={t} v={v}: {numeric} vs {exact}"
                    );
                } else {
                    assert!(numeric > 20.0, "p={p} t={t} v={v}: {numeric}");
                }
            }
        }
    }

    #[test]
    fn gap_bounds_error_and_closes_at_optimum() {
        let a = RowMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let inst =
            ProblemInstance::new(a, Some(vec![0.0, 1.0]), LossFamily::power(1.5).unwrap()).unwrap();
        let cert = DualCertifier::new(&inst).unwrap();
        let fstar = inst.objective(&[0.5]);
        let g = cert.certify(&inst, &[0.2]).unwrap();
        assert!(g.gap >= inst.objective(&[0.2]) - fstar);
        assert!(g.dual <= fstar + 1e-15);
        assert!(cert.certify(&inst, &[0.5]).unwrap().gap < 1e-14);
    }

    #[test]
    fn huber_dual_stays_in_domain() {
        let a = RowMatrix::from_rows(&[vec![1.0], vec![2.0], vec![-1.0]]).unwrap();
        let inst =
            ProblemInstance::new(a, Some(vec![5.0, -3.0, 9.0]), LossFamily::huber()).unwrap();
        let g = DualCertifier::new(&inst)
            .unwrap()
            .certify(&inst, &[0.0])
            .unwrap();
        assert!(g.gap.is_finite() && g.dual.is_finite());
    }
}
