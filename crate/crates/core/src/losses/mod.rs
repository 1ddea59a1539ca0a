//! Scalar loss families and their growth certificates.
//!
//! A [`LossFamily`] describes one scalar loss per term, `f_i : R -> R_+`,
//! together with the constants that the sparsifier and the weight iteration
//! rely on. Constants marked "h-level" refer to `h_i = sqrt(f_i)`.

mod certify;
mod surrogate;

pub use certify::{certify_properties, Certificate, GridSpec, ImpliedConstants, PropertyCheck};
pub use surrogate::{
    divergence_surrogate, surrogate_calibration, DivergenceSurrogate, SurrogateCalibration,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Growth constants claimed for a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Auto-Lipschitz constant of `sqrt(f)`.
    #[serde(rename = "L")]
    pub lip: f64,
    /// Lower homogeneity exponent of `sqrt(f)`.
    pub theta: f64,
    /// Lower homogeneity constant of `sqrt(f)`.
    pub c: f64,
    /// Upper homogeneity exponent of `f`.
    pub u: f64,
    /// Upper homogeneity constant of `f`.
    #[serde(rename = "C")]
    pub big_c: f64,
    /// Symmetry constant of `f`: `f(z) <= K f(-z)`.
    #[serde(rename = "K")]
    pub k: f64,
}

impl Constants {
    /// Lower homogeneity of `f` itself: exponent `2 theta`, constant `c^2`.
    pub fn f_lower(&self) -> (f64, f64) {
        (2.0 * self.theta, self.c * self.c)
    }

    /// Contraction factor `max(|theta_f/2 - 1|, |u/2 - 1|)` of the weight iteration.
    pub fn contraction_factor(&self) -> f64 {
        let (theta_f, _) = self.f_lower();
        (theta_f / 2.0 - 1.0).abs().max((self.u / 2.0 - 1.0).abs())
    }

    /// `C_1 = max(C, 1/c_f)`.
    pub fn c1(&self) -> f64 {
        let (_, c_f) = self.f_lower();
        self.big_c.max(1.0 / c_f)
    }
}

/// A user-supplied per-term loss `f(i, z)`.
#[derive(Clone)]
pub struct CustomLoss {
    pub name: String,
    pub eval: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLoss")
            .field("name", &self.name)
            .finish()
    }
}

/// The shape of the per-term loss.
#[derive(Debug, Clone)]
pub enum LossKind {
    /// `|z|^p`, `p in (0, 2]`.
    Power {
        p: f64,
    },
    /// `gamma_p(t_i, z)`, quadratic below the threshold and `|z|^p` above.
    /// `p = 1` is the Huber loss.
    Gamma {
        p: f64,
    },
    /// `min{|z|, |z|^eta}^2`, a lower-homogeneous stand-in for Tukey.
    TukeyProxy {
        eta: f64,
    },
    /// `min{z^2, 1}`.
    Tukey,
    Custom(CustomLoss),
}

/// Per-term thresholds of a gamma family.
#[derive(Debug, Clone, PartialEq)]
pub enum Thresholds {
    Uniform(f64),
    PerTerm(Vec<f64>),
}

impl Thresholds {
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        match self {
            Thresholds::Uniform(t) => *t,
            Thresholds::PerTerm(v) => v[i],
        }
    }
}

/// The quadratic perturbation `f_i(z) + s_max w_i z^2` used to seed the
/// weight iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadBoost {
    pub s_max: f64,
    pub weights: Vec<f64>,
}

/// A family of scalar losses, one per term.
#[derive(Debug, Clone)]
pub struct LossFamily {
    kind: LossKind,
    thresholds: Option<Thresholds>,
    boost: Option<QuadBoost>,
    scales: Option<Vec<f64>>,
    constants: Constants,
}

/// `gamma_p(t, z)`: `(p/2) t^(p-2) z^2` for `|z| <= t`, `|z|^p - (1 - p/2) t^p` above.
#[inline]
pub fn gamma_p(p: f64, t: f64, z: f64) -> f64 {
    let a = z.abs();
    if t <= 0.0 {
        return a.powf(p);
    }
    if a <= t {
        0.5 * p * t.powf(p - 2.0) * a * a
    } else {
        a.powf(p) - (1.0 - 0.5 * p) * t.powf(p)
    }
}

#[inline]
fn gamma_p_deriv(p: f64, t: f64, z: f64) -> f64 {
    let a = z.abs();
    if t > 0.0 && a <= t {
        p * t.powf(p - 2.0) * z
    } else if a == 0.0 {
        0.0
    } else {
        p * a.powf(p - 1.0) * z.signum()
    }
}

#[inline]
fn gamma_p_second(p: f64, t: f64, z: f64) -> f64 {
    let a = z.abs();
    if t > 0.0 && a <= t {
        p * t.powf(p - 2.0)
    } else if a == 0.0 {
        if p == 2.0 {
            2.0
        } else {
            f64::INFINITY
        }
    } else {
        p * (p - 1.0) * a.powf(p - 2.0)
    }
}

impl LossFamily {
    /// `|z|^p` for every term.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::config(format!(
                "power loss needs p in (0, 2], got {p}"
            )));
        }
        Ok(LossFamily {
            kind: LossKind::Power { p },
            thresholds: None,
            boost: None,
            scales: None,
            constants: Constants {
                lip: 1.0,
                theta: p / 2.0,
                c: 1.0,
                u: p,
                big_c: 1.0,
                k: 1.0,
            },
        })
    }

    /// `gamma_p(t, z)` with a single threshold.
    pub fn gamma(p: f64, t: f64) -> Result<Self> {
        Self::gamma_with(p, Thresholds::Uniform(t))
    }

    pub fn gamma_with(p: f64, thresholds: Thresholds) -> Result<Self> {
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::config(format!(
                "gamma loss needs p in (0, 2], got {p}"
            )));
        }
        let ok = match &thresholds {
            Thresholds::Uniform(t) => t.is_finite() && *t > 0.0,
            Thresholds::PerTerm(v) => v.iter().all(|t| t.is_finite() && *t > 0.0),
        };
        if !ok {
            return Err(Error::config(
                "gamma thresholds must be finite and positive",
            ));
        }
        Ok(LossFamily {
            kind: LossKind::Gamma { p },
            thresholds: Some(thresholds),
            boost: None,
            scales: None,
            constants: Constants {
                lip: 1.0,
                theta: p / 2.0,
                c: 1.0,
                u: 2.0,
                big_c: 1.0,
                k: 1.0,
            },
        })
    }

    /// Huber loss `gamma_1(1, z)`.
    pub fn huber() -> Self {
        Self::gamma(1.0, 1.0).expect("valid constants")
    }

    /// `min{|z|, |z|^eta}^2`.
    pub fn tukey_proxy(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::config(format!(
                "tukey proxy needs eta in (0, 1], got {eta}"
            )));
        }
        Ok(LossFamily {
            kind: LossKind::TukeyProxy { eta },
            thresholds: None,
            boost: None,
            scales: None,
            constants: Constants {
                lip: 1.0,
                theta: eta,
                c: 1.0,
                u: 2.0,
                big_c: 1.0,
                k: 1.0,
            },
        })
    }

    /// Default proxy exponent `(ln n)^(-1/3)`, clamped to `(0, 1]`.
    pub fn default_tukey_eta(n: usize) -> f64 {
        let ln = (n.max(3) as f64).ln();
        ln.powf(-1.0 / 3.0).min(1.0)
    }

    /// `min{z^2, 1}`. Not lower homogeneous: `theta` is recorded as zero.
    pub fn tukey() -> Self {
        LossFamily {
            kind: LossKind::Tukey,
            thresholds: None,
            boost: None,
            scales: None,
            constants: Constants {
                lip: 1.0,
                theta: 0.0,
                c: 1.0,
                u: 2.0,
                big_c: 1.0,
                k: 1.0,
            },
        }
    }

    /// A custom loss. Its claimed constants must pass [`certify_properties`]
    /// before the sparsifier accepts it.
    pub fn custom(
        name: impl Into<String>,
        eval: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
        constants: Constants,
    ) -> Self {
        LossFamily {
            kind: LossKind::Custom(CustomLoss {
                name: name.into(),
                eval,
            }),
            thresholds: None,
            boost: None,
            scales: None,
            constants,
        }
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn thresholds(&self) -> Option<&Thresholds> {
        self.thresholds.as_ref()
    }

    pub fn boost(&self) -> Option<&QuadBoost> {
        self.boost.as_ref()
    }

    /// The exponent `p` for power and gamma families.
    pub fn p(&self) -> Option<f64> {
        match self.kind {
            LossKind::Power { p } | LossKind::Gamma { p } => Some(p),
            _ => None,
        }
    }

    pub fn is_huber(&self) -> bool {
        matches!(self.kind, LossKind::Gamma { p } if p == 1.0)
    }

    /// Threshold of term `i` (zero for families without one).
    #[inline]
    pub fn threshold(&self, i: usize) -> f64 {
        self.thresholds.as_ref().map_or(0.0, |t| t.get(i))
    }

    /// Number of per-term parameters, if the family carries any.
    pub fn per_term_len(&self) -> Option<usize> {
        let t = match &self.thresholds {
            Some(Thresholds::PerTerm(v)) => Some(v.len()),
            _ => None,
        };
        t.or(self.boost.as_ref().map(|b| b.weights.len()))
            .or(self.scales.as_ref().map(Vec::len))
    }

    /// Adds `s_max w_i z^2` to every term.
    ///
    /// The square root of the result stays `max(1, L)`-auto-Lipschitz and lower
    /// `theta`-homogeneous with the same `c`; upper growth becomes quadratic.
    pub fn perturbed(&self, s_max: f64, weights: Vec<f64>) -> Self {
        let mut out = self.clone();
        let mut k = out.constants;
        k.lip = k.lip.max(1.0);
        k.big_c = k.big_c.max(1.0);
        k.u = 2.0;
        out.constants = k;
        out.boost = Some(QuadBoost { s_max, weights });
        out
    }

    /// Multiplies term `i` by `scales[i] > 0`. Growth constants are unchanged.
    pub fn scaled(&self, scales: Vec<f64>) -> Self {
        let mut out = self.clone();
        let merged = match &self.scales {
            Some(old) => old.iter().zip(&scales).map(|(a, b)| a * b).collect(),
            None => scales,
        };
        out.scales = Some(merged);
        out
    }

    pub fn term_scales(&self) -> Option<&[f64]> {
        self.scales.as_deref()
    }

    #[inline]
    fn scale_of(&self, i: usize) -> f64 {
        self.scales.as_ref().map_or(1.0, |s| s[i])
    }

    /// The same family restricted to the listed terms, in order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut out = self.clone();
        if let Some(Thresholds::PerTerm(v)) = &self.thresholds {
            out.thresholds = Some(Thresholds::PerTerm(indices.iter().map(|&i| v[i]).collect()));
        }
        if let Some(b) = &self.boost {
            out.boost = Some(QuadBoost {
                s_max: b.s_max,
                weights: indices.iter().map(|&i| b.weights[i]).collect(),
            });
        }
        if let Some(s) = &self.scales {
            out.scales = Some(indices.iter().map(|&i| s[i]).collect());
        }
        if let LossKind::Custom(c) = &self.kind {
            let map: Vec<usize> = indices.to_vec();
            let inner = c.eval.clone();
            out.kind = LossKind::Custom(CustomLoss {
                name: c.name.clone(),
                eval: Arc::new(move |i, z| inner(map[i], z)),
            });
        }
        out
    }

    /// The same family with the quadratic perturbation removed.
    pub fn unperturbed(&self) -> Self {
        let mut out = self.clone();
        out.boost = None;
        out
    }

    #[inline]
    fn boost_term(&self, i: usize, z: f64) -> f64 {
        self.boost
            .as_ref()
            .map_or(0.0, |b| b.s_max * b.weights[i] * z * z)
    }

    /// `f_i(z)` without input validation; used in hot loops.
    #[inline]
    pub fn value(&self, i: usize, z: f64) -> f64 {
        let base = match &self.kind {
            LossKind::Power { p } => z.abs().powf(*p),
            LossKind::Gamma { p } => gamma_p(*p, self.threshold(i), z),
            LossKind::TukeyProxy { eta } => {
                let a = z.abs();
                if a <= 1.0 {
                    a * a
                } else {
                    a.powf(2.0 * eta)
                }
            }
            LossKind::Tukey => (z * z).min(1.0),
            LossKind::Custom(c) => (c.eval)(i, z),
        };
        self.scale_of(i) * base + self.boost_term(i, z)
    }

    /// `f_i(z)`, rejecting non-finite inputs.
    pub fn eval_loss(&self, i: usize, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::Domain(format!(
                "loss argument must be finite, got {z}"
            )));
        }
        Ok(self.value(i, z))
    }

    /// `f_i'(z)`.
    pub fn deriv(&self, i: usize, z: f64) -> Result<f64> {
        let base = match &self.kind {
            LossKind::Power { p } => {
                if z == 0.0 {
                    if *p <= 1.0 {
                        return Err(Error::NonDifferentiable {
                            at: z,
                            reason: format!("|z|^{p} has no derivative at 0"),
                        });
                    }
                    0.0
                } else {
                    p * z.abs().powf(p - 1.0) * z.signum()
                }
            }
            LossKind::Gamma { p } => {
                let t = self.threshold(i);
                if t == 0.0 && z == 0.0 && *p <= 1.0 {
                    return Err(Error::NonDifferentiable {
                        at: z,
                        reason: "zero threshold".into(),
                    });
                }
                gamma_p_deriv(*p, t, z)
            }
            LossKind::TukeyProxy { eta } => {
                let a = z.abs();
                if a <= 1.0 {
                    2.0 * z
                } else {
                    2.0 * eta * a.powf(2.0 * eta - 1.0) * z.signum()
                }
            }
            LossKind::Tukey => {
                if z.abs() < 1.0 {
                    2.0 * z
                } else {
                    0.0
                }
            }
            LossKind::Custom(c) => {
                let h = 1e-6 * z.abs().max(1e-3);
                ((c.eval)(i, z + h) - (c.eval)(i, z - h)) / (2.0 * h)
            }
        };
        Ok(self.scale_of(i) * base
            + self
                .boost
                .as_ref()
                .map_or(0.0, |b| 2.0 * b.s_max * b.weights[i] * z))
    }

    /// `f_i''(z)`, possibly `+inf` where the loss has a cusp. At a threshold
    /// kink the inner branch is used.
    pub fn second(&self, i: usize, z: f64) -> f64 {
        let base = match &self.kind {
            LossKind::Power { p } => {
                if z == 0.0 {
                    if *p == 2.0 {
                        2.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    p * (p - 1.0) * z.abs().powf(p - 2.0)
                }
            }
            LossKind::Gamma { p } => gamma_p_second(*p, self.threshold(i), z),
            LossKind::TukeyProxy { eta } => {
                let a = z.abs();
                if a <= 1.0 {
                    2.0
                } else {
                    2.0 * eta * (2.0 * eta - 1.0) * a.powf(2.0 * eta - 2.0)
                }
            }
            LossKind::Tukey => {
                if z.abs() < 1.0 {
                    2.0
                } else {
                    0.0
                }
            }
            LossKind::Custom(c) => {
                let h = 1e-4 * z.abs().max(1e-2);
                ((c.eval)(i, z + h) - 2.0 * (c.eval)(i, z) + (c.eval)(i, z - h)) / (h * h)
            }
        };
        self.scale_of(i) * base
            + self
                .boost
                .as_ref()
                .map_or(0.0, |b| 2.0 * b.s_max * b.weights[i])
    }

    /// Whether every term is convex (required by the refinement solver).
    pub fn is_convex(&self) -> bool {
        match self.kind {
            LossKind::Power { p } => p >= 1.0,
            LossKind::Gamma { p } => p >= 1.0,
            LossKind::TukeyProxy { eta } => eta >= 0.5,
            LossKind::Tukey | LossKind::Custom(_) => false,
        }
    }

    /// Bregman divergence `f_i(z0 + d) - f_i(z0) - f_i'(z0) d`.
    pub fn eval_divergence(&self, i: usize, z0: f64, delta: f64) -> Result<f64> {
        if !z0.is_finite() || !delta.is_finite() {
            return Err(Error::Domain("divergence arguments must be finite".into()));
        }
        let g = self.deriv(i, z0)?;
        let d = self.value(i, z0 + delta) - self.value(i, z0) - g * delta;
        Ok(if self.is_convex() { d.max(0.0) } else { d })
    }

    /// Serializable description. Custom losses have none.
    pub fn to_spec(&self) -> Option<LossSpec> {
        let (kind, p, eta) = match self.kind {
            LossKind::Power { p } => ("power", Some(p), None),
            LossKind::Gamma { p } if p == 1.0 => ("huber", Some(p), None),
            LossKind::Gamma { p } => ("gamma", Some(p), None),
            LossKind::TukeyProxy { eta } => ("tukey-proxy", None, Some(eta)),
            LossKind::Tukey => ("tukey", None, None),
            LossKind::Custom(_) => return None,
        };
        let thresholds = self.thresholds.as_ref().map(|t| match t {
            Thresholds::Uniform(v) => ThresholdSpec::Uniform(*v),
            Thresholds::PerTerm(v) => ThresholdSpec::PerTerm(v.clone()),
        });
        Some(LossSpec {
            kind: kind.to_string(),
            p,
            thresholds,
            eta,
            constants: Some(self.constants),
        })
    }

    pub fn from_spec(spec: &LossSpec) -> Result<Self> {
        let thresholds = match &spec.thresholds {
            None => None,
            Some(ThresholdSpec::Uniform(t)) => Some(Thresholds::Uniform(*t)),
            Some(ThresholdSpec::PerTerm(v)) => Some(Thresholds::PerTerm(v.clone())),
        };
        let need_p = || {
            spec.p
                .ok_or_else(|| Error::config(format!("loss kind '{}' needs field p", spec.kind)))
        };
        let fam = match spec.kind.as_str() {
            "power" | "lp" => LossFamily::power(need_p()?)?,
            "gamma" | "gamma-p" => {
                LossFamily::gamma_with(need_p()?, thresholds.unwrap_or(Thresholds::Uniform(1.0)))?
            }
            "huber" => LossFamily::gamma_with(1.0, thresholds.unwrap_or(Thresholds::Uniform(1.0)))?,
            "tukey-proxy" => LossFamily::tukey_proxy(
                spec.eta
                    .ok_or_else(|| Error::config("tukey-proxy needs eta"))?,
            )?,
            "tukey" => LossFamily::tukey(),
            other => return Err(Error::config(format!("unknown loss kind '{other}'"))),
        };
        Ok(match spec.constants {
            Some(k) => fam.with_constants(k),
            None => fam,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: LossSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("loss json: {e}")))?;
        Self::from_spec(&spec)
    }
}

/// JSON form of a loss family:
/// `{kind, p, thresholds?, eta?, constants{L,theta,c,u,C,K}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    Uniform(f64),
    PerTerm(Vec<f64>),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_two_is_square() {
        let f = LossFamily::gamma(2.0, 1.0).unwrap();
        assert!((f.eval_loss(0, 0.7).unwrap() - 0.49).abs() < 1e-15);
        for t in [0.01, 0.3, 1.0, 7.0] {
            for z in [-9.0, -0.2, 0.0, 0.5, 3.0] {
                assert!((gamma_p(2.0, t, z) - z * z).abs() <= 1e-12 * (1.0 + z * z));
            }
        }
    }

    #[test]
    fn huber_values_and_continuity() {
        let f = LossFamily::huber();
        assert!((f.value(0, 0.5) - 0.125).abs() < 1e-15);
        let below: f64 = 0.5 * 1.0 * 1.0;
        let above = 1.0 - (1.0 - 0.5);
        assert!((f.value(0, 1.0) - 0.5).abs() < 1e-15);
        assert!((below - above).abs() < 1e-15);
        let eps = 1e-9;
        assert!((f.value(0, 1.0 + eps) - f.value(0, 1.0 - eps)).abs() < 1e-8);
    }

    #[test]
    fn tukey_proxy_value() {
        let f = LossFamily::tukey_proxy(0.5).unwrap();
        assert!((f.value(0, 4.0) - 4.0).abs() < 1e-12);
        assert!((f.value(0, 0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn non_finite_is_domain_error() {
        let f = LossFamily::power(1.5).unwrap();
        assert!(matches!(f.eval_loss(0, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(
            f.eval_loss(0, f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn power_divergences() {
        let f = LossFamily::power(2.0).unwrap();
        assert!((f.eval_divergence(0, 3.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let g = LossFamily::power(1.5).unwrap();
        assert_eq!(g.eval_divergence(0, 1.0, 0.0).unwrap(), 0.0);
        let h = LossFamily::power(1.0).unwrap();
        assert!(matches!(
            h.eval_divergence(0, 0.0, 1.0),
            Err(Error::NonDifferentiable { .. })
        ));
        assert!(h.eval_divergence(0, 2.0, 1.0).is_ok());
    }

    #[test]
    fn perturbation_adds_quadratic() {
        let f = LossFamily::power(1.0)
            .unwrap()
            .perturbed(4.0, vec![0.5, 0.25]);
        assert!((f.value(1, 2.0) - (2.0 + 4.0 * 0.25 * 4.0)).abs() < 1e-12);
        assert!((f.deriv(0, 1.0).unwrap() - (1.0 + 4.0)).abs() < 1e-12);
        assert_eq!(f.constants().u, 2.0);
        let r = f.restrict(&[1]);
        assert!((r.value(0, 2.0) - f.value(1, 2.0)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let spec = r#"{"kind":"gamma","p":1.5,"thresholds":[0.5,2.0],"constants":{"L":1,"theta":0.75,"c":1,"u":2,"C":1,"K":1}}"#;
        let f = LossFamily::from_json(spec).unwrap();
        assert_eq!(f.threshold(1), 2.0);
        let back = f.to_spec().unwrap();
        let again = LossFamily::from_spec(&back).unwrap();
        assert_eq!(again.to_spec().unwrap(), back);
        assert!(LossFamily::from_json(r#"{"kind":"nope"}"#).is_err());
        let h = LossFamily::from_json(r#"{"kind":"huber"}"#).unwrap();
        assert!(h.is_huber());
    }

    #[test]
    fn default_eta() {
        let eta = LossFamily::default_tukey_eta(4);
        assert!((eta - (4f64).ln().powf(-1.0 / 3.0)).abs() < 1e-15);
    }
}
