//! Brute-force audits of a sparsifier against the full objective.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{audit_space, SparsifiedModel};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::linalg::{dot, gram};
use crate::par;
use crate::rng::StreamSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub gaussian_dirs: usize,
    pub coordinate_dirs: bool,
    /// Row-aligned directions `(AᵀA)⁺ a_i`, at most this many.
    pub max_row_dirs: usize,
    /// Log-spaced objective targets across the validity range.
    pub n_scales: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            gaussian_dirs: 64,
            coordinate_dirs: true,
            max_row_dirs: 256,
            n_scales: 24,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSensitivity {
    pub s: f64,
    /// Estimated `Σ_i ξ_i(s)`.
    pub sum: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub max_rel_error: f64,
    /// Point of the largest error, in the (lifted, if shifted) audit space.
    pub worst_x: Vec<f64>,
    pub worst_objective: f64,
    pub points: usize,
    pub sensitivity: Vec<ScaleSensitivity>,
    /// `max_s Σ ξ_i(s) / n`.
    pub c_xi: f64,
    pub dims: usize,
}

/// Values of `F(λd)` and `F̃(λd)` through precomputed `z_i = ⟨a_i, d⟩`.
struct Ray<'a> {
    inst: &'a ProblemInstance,
    model: &'a SparsifiedModel,
    z: Vec<f64>,
}

impl Ray<'_> {
    fn full(&self, lambda: f64) -> f64 {
        let loss = self.inst.loss();
        par::sum_indexed(self.z.len(), |i| loss.value(i, lambda * self.z[i]))
    }

    fn sparse(&self, lambda: f64) -> f64 {
        let loss = self.inst.loss();
        let (idx, w) = (&self.model.indices, &self.model.weights);
        par::sum_indexed(idx.len(), |k| {
            w[k] * loss.value(idx[k], lambda * self.z[idx[k]])
        })
    }

    fn terms(&self, lambda: f64) -> Vec<f64> {
        let loss = self.inst.loss();
        self.z
            .iter()
            .enumerate()
            .map(|(i, z)| loss.value(i, lambda * z))
            .collect()
    }
}

/// Finds `λ > 0` with `F(λd)` within 0.1% of `target`, by secant steps on
/// `log F` against `log λ` with a bisection safeguard once bracketed.
fn solve_scale(g: impl Fn(f64) -> f64, target: f64) -> Option<(f64, f64)> {
    let lt = target.ln();
    let eval = |l: f64| {
        let v = g(l.exp());
        if v > 0.0 {
            v.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let (mut l0, mut v0) = (0.0f64, eval(0.0));
    if !v0.is_finite() {
        return None;
    }
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let mut slope = 2.0f64;
    for _ in 0..200 {
        if (v0 - lt).abs() <= 1e-3 {
            return Some((l0.exp(), g(l0.exp())));
        }
        if v0 < lt {
            lo = Some(lo.map_or(l0, |x: f64| x.max(l0)));
        } else {
            hi = Some(hi.map_or(l0, |x: f64| x.min(l0)));
        }
        let mut l1 = l0 + (lt - v0) / slope;
        if let (Some(a), Some(b)) = (lo, hi) {
            if !(l1 > a && l1 < b) {
                l1 = 0.5 * (a + b);
            }
        } else {
            l1 = l0 + (l1 - l0).clamp(-40.0, 40.0);
        }
        if l1.abs() > 700.0 {
            return None;
        }
        let v1 = eval(l1);
        if !v1.is_finite() {
            return None;
        }
        let s = (v1 - v0) / (l1 - l0);
        slope = if s.is_finite() && s > 1e-3 { s } else { 1e-3 };
        l0 = l1;
        v0 = v1;
    }
    None
}

fn directions(inst: &ProblemInstance, cfg: &AuditConfig) -> Result<Vec<Vec<f64>>> {
    let (m, n) = (inst.rows(), inst.cols());
    let mut rng = StreamSeed::new(cfg.seed).stream(0xa0d);
    let mut dirs = Vec::new();
    for _ in 0..cfg.gaussian_dirs {
        dirs.push(
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
    }
    if cfg.coordinate_dirs {
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            dirs.push(e);
        }
    }
    if cfg.max_row_dirs > 0 {
        let g = gram(inst.matrix(), &vec![1.0; m])?;
        let mut rows: Vec<usize> = if m <= cfg.max_row_dirs {
            (0..m).collect()
        } else {
            sample(&mut rng, m, cfg.max_row_dirs).into_vec()
        };
        rows.sort_unstable();
        for i in rows {
            dirs.push(g.solve(inst.matrix().row(i)));
        }
    }
    Ok(dirs)
}

fn log_targets(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![(lo * hi).sqrt()];
    }
    (0..k)
        .map(|t| (lo.ln() + (hi.ln() - lo.ln()) * t as f64 / (k - 1) as f64).exp())
        .collect()
}

/// Sweeps rays so that `F` runs through log-spaced targets in
/// `[smin, smax]` and compares `F̃` with `F` at each point. Also estimates
/// `Σ_i ξ_i(s)` from the points in each shell `F ∈ [s/2, s]`.
pub fn audit_sparsifier(
    instance: &ProblemInstance,
    model: &SparsifiedModel,
    cfg: &AuditConfig,
) -> Result<AuditReport> {
    let targets = log_targets(model.smin, model.smax, cfg.n_scales.max(1));
    audit_targets(instance, model, cfg, &targets, true)
}

fn audit_targets(
    instance: &ProblemInstance,
    model: &SparsifiedModel,
    cfg: &AuditConfig,
    targets: &[f64],
    sensitivities: bool,
) -> Result<AuditReport> {
    if model.indices.iter().any(|&i| i >= instance.rows()) {
        return Err(Error::Dimension(
            "model refers to rows beyond the instance".into(),
        ));
    }
    let inst = audit_space(instance);
    let dirs = directions(&inst, cfg)?;
    let a = inst.matrix();
    let rays: Vec<Ray> = dirs
        .iter()
        .map(|d| Ray {
            inst: &inst,
            model,
            z: a.matvec(d),
        })
        .collect();

    // (ray, target) -> (λ, F, F̃)
    let hits: Vec<Vec<Option<(f64, f64, f64)>>> = par::map_indexed(rays.len(), |r| {
        let ray = &rays[r];
        targets
            .iter()
            .map(|&t| solve_scale(|l| ray.full(l), t).map(|(l, f)| (l, f, ray.sparse(l))))
            .collect()
    });

    let mut worst = (0.0f64, 0usize, 0.0f64, 0.0f64);
    let mut points = 0;
    for (r, row) in hits.iter().enumerate() {
        for &(l, f, ft) in row.iter().flatten() {
            points += 1;
            let e = (f - ft).abs() / f;
            if e > worst.0 {
                worst = (e, r, l, f);
            }
        }
    }

    let n = inst.cols();
    let mut sensitivity = Vec::new();
    if sensitivities {
        for (t, &s) in targets.iter().enumerate() {
            let per_ray: Vec<Option<Vec<f64>>> = par::map_indexed(rays.len(), |r| {
                hits[r][t].and_then(|(l, f, _)| {
                    (f >= 0.5 * s && f <= s * 1.002)
                        .then(|| rays[r].terms(l).into_iter().map(|v| v / f).collect())
                })
            });
            let mut xi = vec![0.0f64; inst.rows()];
            let mut count = 0;
            for v in per_ray.into_iter().flatten() {
                count += 1;
                for (x, y) in xi.iter_mut().zip(v) {
                    *x = x.max(y);
                }
            }
            if count > 0 {
                sensitivity.push(ScaleSensitivity {
                    s,
                    sum: xi.iter().sum(),
                    points: count,
                });
            }
        }
    }
    let c_xi = sensitivity
        .iter()
        .map(|s| s.sum / n as f64)
        .fold(0.0, f64::max);
    let worst_x = if points > 0 {
        dirs[worst.1].iter().map(|d| d * worst.2).collect()
    } else {
        vec![]
    };
    Ok(AuditReport {
        max_rel_error: worst.0,
        worst_x,
        worst_objective: worst.3,
        points,
        sensitivity,
        c_xi,
        dims: n,
    })
}

/// Audits at `count` random points whose objective lies outside
/// `[smin, smax]`: half in `[smin·10⁻⁶, smin/2]`, half in `[2 smax, smax·10⁶]`.
pub fn audit_outside(
    instance: &ProblemInstance,
    model: &SparsifiedModel,
    count: usize,
    seed: u64,
) -> Result<AuditReport> {
    let mut rng = StreamSeed::new(seed).stream(0x0a7);
    let targets: Vec<f64> = (0..count)
        .map(|k| {
            let u: f64 = rng.random();
            if k % 2 == 0 {
                (model.smin.ln() + (1e-6f64.ln() + (0.5f64.ln() - 1e-6f64.ln()) * u)).exp()
            } else {
                (model.smax.ln() + (2f64.ln() + (1e6f64.ln() - 2f64.ln()) * u)).exp()
            }
        })
        .collect();
    // One Gaussian direction per target.
    let cfg = AuditConfig {
        gaussian_dirs: 1,
        coordinate_dirs: false,
        max_row_dirs: 0,
        n_scales: 1,
        seed,
    };
    let mut worst: Option<AuditReport> = None;
    let mut points = 0;
    for (k, &t) in targets.iter().enumerate() {
        let c = AuditConfig {
            seed: StreamSeed::new(seed).child(k as u64).0,
            ..cfg.clone()
        };
        let r = audit_targets(instance, model, &c, &[t], false)?;
        points += r.points;
        if worst
            .as_ref()
            .is_none_or(|w| r.max_rel_error > w.max_rel_error)
        {
            worst = Some(r);
        }
    }
    let mut out = worst.unwrap_or(AuditReport {
        max_rel_error: 0.0,
        worst_x: vec![],
        worst_objective: 0.0,
        points: 0,
        sensitivity: vec![],
        c_xi: 0.0,
        dims: instance.cols(),
    });
    out.points = points;
    Ok(out)
}

/// Audits at `count` random points of the ball `‖x‖₂ <= radius` in the
/// original coordinates, with radii log-uniform in `[radius·10⁻⁶, radius]`.
pub fn audit_ball(
    instance: &ProblemInstance,
    model: &SparsifiedModel,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<AuditReport> {
    let n = instance.cols();
    let mut rng = StreamSeed::new(seed).stream(0xba11);
    let xs: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            let d: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dot(&d, &d).sqrt();
            let u: f64 = rng.random();
            let r = radius * (1e-6f64.ln() * (1.0 - u)).exp();
            d.iter().map(|v| v * r / norm).collect()
        })
        .collect();
    let mut worst = (0.0f64, 0usize, 0.0f64);
    let mut points = 0;
    for (k, x) in xs.iter().enumerate() {
        let f = instance.objective(x);
        if f <= 0.0 {
            continue;
        }
        points += 1;
        let e = (f - model.eval(instance, x)).abs() / f;
        if e > worst.0 {
            worst = (e, k, f);
        }
    }
    Ok(AuditReport {
        max_rel_error: worst.0,
        worst_x: if points > 0 {
            xs[worst.1].clone()
        } else {
            vec![]
        },
        worst_objective: worst.2,
        points,
        sensitivity: vec![],
        c_xi: 0.0,
        dims: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RowMatrix;
    use crate::losses::LossFamily;

    fn inst() -> ProblemInstance {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![1.0 + (i as f64 * 0.7).sin(), (i as f64).cos()])
            .collect();
        ProblemInstance::new(
            RowMatrix::from_rows(&rows).unwrap(),
            None,
            LossFamily::power(1.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn full_model_has_zero_error() {
        let inst = inst();
        let model = SparsifiedModel::identity(30, 1e-3, 1e3);
        let r = audit_sparsifier(&inst, &model, &AuditConfig::default()).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
        assert!(r.points > 24 * 60);
        assert!(r.c_xi > 0.0 && r.c_xi <= 20.0);
    }

    #[test]
    fn scaled_model_error_is_the_scale() {
        let inst = inst();
        let mut model = SparsifiedModel::identity(30, 1e-3, 1e3);
        model.weights.iter_mut().for_each(|w| *w = 1.1);
        let r = audit_sparsifier(&inst, &model, &AuditConfig::default()).unwrap();
        assert!((r.max_rel_error - 0.1).abs() < 1e-12);
        let o = audit_outside(&inst, &model, 10, 3).unwrap();
        assert!((o.max_rel_error - 0.1).abs() < 1e-12);
        assert_eq!(o.points, 10);
    }

    #[test]
    fn targets_are_hit() {
        let inst = inst();
        let d = vec![0.3, -1.0];
        let z = inst.matrix().matvec(&d);
        let model = SparsifiedModel::identity(30, 1.0, 2.0);
        let ray = Ray {
            inst: &inst,
            model: &model,
            z,
        };
        for t in [1e-9, 1.0, 1e9] {
            let (l, f) = solve_scale(|l| ray.full(l), t).unwrap();
            assert!((f / t - 1.0).abs() < 2e-3);
            assert!((ray.full(l) - f).abs() <= 1e-12 * f);
        }
    }

    #[test]
    fn bounded_loss_misses_high_targets() {
        let inst = inst().with_loss(LossFamily::tukey()).unwrap();
        let model = SparsifiedModel::identity(30, 1.0, 2.0);
        let ray = Ray {
            inst: &inst,
            model: &model,
            z: inst.matrix().matvec(&[1.0, 0.0]),
        };
        assert!(solve_scale(|l| ray.full(l), 1e6).is_none());
    }
}
