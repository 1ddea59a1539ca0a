//! Grid certification of the growth constants claimed by a loss family.

use serde::{Deserialize, Serialize};

use super::{LossFamily, Thresholds};
use crate::error::{Error, Result};

/// Points on which the growth inequalities are checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// `|z| = 2^k` for these exponents, with both signs.
    pub z_exponents: Vec<i32>,
    pub include_zero: bool,
    /// `λ = 2^k` for these exponents; only `λ >= 1` is meaningful.
    pub lambda_exponents: Vec<i32>,
    /// Relative slack on every inequality.
    pub tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            z_exponents: (-20..=20).collect(),
            include_zero: true,
            lambda_exponents: (0..=10).collect(),
            tol: 1e-9,
        }
    }
}

impl GridSpec {
    fn points(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 * self.z_exponents.len() + 1);
        if self.include_zero {
            z.push(0.0);
        }
        for &k in &self.z_exponents {
            let a = 2f64.powi(k);
            z.push(a);
            z.push(-a);
        }
        z
    }

    fn lambdas(&self) -> Vec<f64> {
        self.lambda_exponents
            .iter()
            .map(|&k| 2f64.powi(k))
            .filter(|l| *l >= 1.0)
            .collect()
    }
}

/// Outcome of one inequality over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    /// Largest `lhs / rhs` seen; `<= 1 + tol` passes.
    pub worst_ratio: f64,
    /// `(term, z, z' or λ)` at the worst ratio.
    pub witness: Option<(usize, f64, f64)>,
}

/// Constants implied by the certified ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedConstants {
    /// `h(-z) <= L h(z)`, so `f(z) <= L^2 f(-z)`.
    pub symmetry_f: f64,
    /// `h(z) <= (1/c) h(λz)` for `λ >= 1`.
    pub monotone_h: f64,
    /// `h(λz) <= (2L/c) λ h(z)` for `λ >= 1`.
    pub upper_one_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub pass: bool,
    pub checks: Vec<PropertyCheck>,
    pub implied: ImpliedConstants,
}

impl Certificate {
    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tracker {
    name: &'static str,
    tol: f64,
    worst: f64,
    witness: Option<(usize, f64, f64)>,
}

impl Tracker {
    fn new(name: &'static str, tol: f64) -> Self {
        Tracker {
            name,
            tol,
            worst: 0.0,
            witness: None,
        }
    }

    fn see(&mut self, lhs: f64, rhs: f64, w: (usize, f64, f64)) {
        let r = if lhs <= 0.0 {
            0.0
        } else if rhs <= 0.0 || !lhs.is_finite() {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        // Ties go to the larger |z|: growth failures at scale are the ones that matter.
        let tie_larger =
            r == self.worst && self.witness.is_some_and(|(_, z, _)| w.1.abs() > z.abs());
        if r > self.worst || tie_larger || (r.is_nan() && !self.worst.is_nan()) {
            self.worst = r;
            self.witness = Some(w);
        }
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            name: self.name.to_string(),
            pass: self.worst <= 1.0 + self.tol,
            worst_ratio: self.worst,
            witness: self.witness,
        }
    }
}

/// One term index per distinct parameter setting.
fn representative_terms(family: &LossFamily) -> Vec<usize> {
    let len = family.per_term_len().unwrap_or(1).max(1);
    let mut seen: Vec<(u64, u64)> = Vec::new();
    let mut out = Vec::new();
    for i in 0..len {
        let t = match family.thresholds() {
            Some(Thresholds::PerTerm(_)) => family.threshold(i).to_bits(),
            _ => 0,
        };
        let w = family.boost().map_or(0, |b| b.weights[i].to_bits());
        if !seen.contains(&(t, w)) {
            seen.push((t, w));
            out.push(i);
        }
    }
    out
}

/// Checks the claimed constants of `family` on `grid`.
///
/// Properties, with `h = sqrt(f)`:
/// `nonnegative`, `zero_at_origin`, `auto_lipschitz` (`|h(z)-h(z')| <= L h(z-z')`),
/// `lower_homogeneous` (`h(λz) >= c λ^θ h(z)`), `symmetric` (`f(z) <= K f(-z)`),
/// `monotone` (`h(z) <= (1/c) h(λz)`), `upper_homogeneous` (`f(λz) <= C λ^u f(z)`),
/// and `upper_one_implied` (`h(λz) <= (2L/c) λ h(z)`).
pub fn certify_properties(family: &LossFamily, grid: &GridSpec) -> Result<Certificate> {
    let zs = grid.points();
    let lambdas = grid.lambdas();
    if zs.is_empty() || lambdas.is_empty() {
        return Err(Error::config("certification grid is empty"));
    }
    let k = family.constants();
    let tol = grid.tol;
    let mut nonneg = Tracker::new("nonnegative", tol);
    let mut origin = Tracker::new("zero_at_origin", tol);
    let mut lip = Tracker::new("auto_lipschitz", tol);
    let mut lower = Tracker::new("lower_homogeneous", tol);
    let mut sym = Tracker::new("symmetric", tol);
    let mut mono = Tracker::new("monotone", tol);
    let mut upper = Tracker::new("upper_homogeneous", tol);
    let mut upper_one = Tracker::new("upper_one_implied", tol);

    for i in representative_terms(family) {
        let h = |z: f64| family.value(i, z).max(0.0).sqrt();
        let f0 = family.value(i, 0.0);
        origin.see(f0.abs(), 0.0, (i, 0.0, 0.0));
        for &z in &zs {
            let fz = family.value(i, z);
            nonneg.see(-fz, 0.0, (i, z, 0.0));
            sym.see(fz, k.k * family.value(i, -z), (i, z, -z));
            let hz = h(z);
            for &z2 in &zs {
                lip.see((hz - h(z2)).abs(), k.lip * h(z - z2), (i, z, z2));
            }
            for &l in &lambdas {
                let hl = h(l * z);
                lower.see(k.c * l.powf(k.theta) * hz, hl, (i, z, l));
                mono.see(k.c * hz, hl, (i, z, l));
                upper.see(
                    family.value(i, l * z),
                    k.big_c * l.powf(k.u) * fz,
                    (i, z, l),
                );
                upper_one.see(hl, 2.0 * k.lip / k.c * l * hz, (i, z, l));
            }
        }
    }

    let checks: Vec<PropertyCheck> = [nonneg, origin, lip, lower, sym, mono, upper, upper_one]
        .into_iter()
        .map(Tracker::finish)
        .collect();
    Ok(Certificate {
        pass: checks.iter().all(|c| c.pass),
        checks,
        implied: ImpliedConstants {
            symmetry_f: k.lip * k.lip,
            monotone_h: 1.0 / k.c,
            upper_one_h: 2.0 * k.lip / k.c,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Constants;
    use std::sync::Arc;

    #[test]
    fn huber_passes() {
        let c = certify_properties(&LossFamily::huber(), &GridSpec::default()).unwrap();
        assert!(c.pass, "{:?}", c.checks);
    }

    #[test]
    fn square_passes() {
        let c = certify_properties(&LossFamily::power(2.0).unwrap(), &GridSpec::default()).unwrap();
        assert!(c.pass);
    }

    #[test]
    fn tukey_proxy_passes() {
        let f = LossFamily::tukey_proxy(LossFamily::default_tukey_eta(8)).unwrap();
        let c = certify_properties(&f, &GridSpec::default()).unwrap();
        assert!(c.pass, "{:?}", c.checks);
    }

    #[test]
    fn glued_loss_fails_symmetry_at_large_z() {
        let glued = Arc::new(|_i: usize, z: f64| if z >= 0.0 { z * z } else { z.abs() });
        let k = Constants {
            lip: 1.0,
            theta: 0.5,
            c: 1.0,
            u: 2.0,
            big_c: 1.0,
            k: 1000.0,
        };
        let f = LossFamily::custom("glued", glued, k);
        let c = certify_properties(&f, &GridSpec::default()).unwrap();
        assert!(!c.pass);
        let s = c.check("symmetric").unwrap();
        assert!(!s.pass);
        let (_, z, _) = s.witness.unwrap();
        assert!(z.abs() >= 2f64.powi(10), "witness {z}");
    }

    #[test]
    fn overclaimed_theta_fails() {
        let f = LossFamily::power(1.0).unwrap().with_constants(Constants {
            lip: 1.0,
            theta: 0.75,
            c: 1.0,
            u: 1.0,
            big_c: 1.0,
            k: 1.0,
        });
        let c = certify_properties(&f, &GridSpec::default()).unwrap();
        assert!(!c.check("lower_homogeneous").unwrap().pass);
    }

    #[test]
    fn empty_grid_is_config_error() {
        let g = GridSpec {
            z_exponents: vec![],
            include_zero: false,
            ..GridSpec::default()
        };
        assert!(matches!(
            certify_properties(&LossFamily::huber(), &g),
            Err(Error::Config(_))
        ));
    }
}
