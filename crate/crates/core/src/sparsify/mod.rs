//! Importance-sampling sparsifiers for GLM objectives.
//!
//! Rows are sampled with probability proportional to their largest leverage
//! score over a weight scheme covering the requested value range. Sampled
//! terms are reweighted by `count / (M ρ_i)`, so the sparsifier is unbiased
//! at every point.

mod audit;
mod huber;
mod tukey;

pub use audit::{
    audit_ball, audit_outside, audit_sparsifier, AuditConfig, AuditReport, ScaleSensitivity,
};
pub use huber::{huber_globalize, huber_sparsify};
pub use tukey::{tukey_sparsify, TukeyConfig};

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::losses::{LossFamily, LossKind};
use crate::rng::StreamSeed;
use crate::weights::{
    default_perturbation, find_weights, initial_weights, FindWeightsConfig, WeightScheme,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SparsifyConfig {
    pub eps: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub seed: u64,
    /// Bootstrap rounds. Ignored when `schedule` is set.
    pub rounds: usize,
    /// Explicit per-round accuracies, last one used for the final round.
    pub schedule: Option<Vec<f64>>,
    /// Fixed sample count `M`, bypassing the formula.
    pub budget: Option<usize>,
    /// Constant in `M = ⌈C_M ε⁻² ‖τ̄‖₁ (log₂ m)³⌉`.
    pub c_m: f64,
    /// Budget doublings allowed when the audit fails.
    pub max_doublings: usize,
    /// Audit every round and double the budget on failure.
    pub audit: bool,
    pub audit_cfg: AuditConfig,
}

impl SparsifyConfig {
    pub fn new(eps: f64, s_min: f64, s_max: f64, seed: u64) -> Self {
        SparsifyConfig {
            eps,
            s_min,
            s_max,
            seed,
            rounds: 1,
            schedule: None,
            budget: None,
            c_m: 1.0,
            max_doublings: 3,
            audit: true,
            audit_cfg: AuditConfig {
                seed,
                ..AuditConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::config(format!(
                "eps must lie in (0, 1/2), got {}",
                self.eps
            )));
        }
        if !(self.s_min > 0.0 && self.s_max > self.s_min && self.s_max.is_finite()) {
            return Err(Error::config(format!(
                "need 0 < s_min < s_max, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if self.budget == Some(0) {
            return Err(Error::config("sample budget must be at least 1"));
        }
        if !(self.c_m > 0.0) {
            return Err(Error::config("C_M must be positive"));
        }
        if let Some(s) = &self.schedule {
            if s.is_empty() || s.iter().any(|e| !(*e > 0.0 && *e < 0.5)) {
                return Err(Error::config("every scheduled eps must lie in (0, 1/2)"));
            }
        }
        if self.rounds == 0 {
            return Err(Error::config("at least one round is required"));
        }
        Ok(())
    }

    /// Per-round accuracies. Without an explicit schedule the rounds grow
    /// geometrically by 3 and are normalized to sum to `eps`.
    pub fn round_schedule(&self) -> Vec<f64> {
        if let Some(s) = &self.schedule {
            return s.clone();
        }
        let h = self.rounds as i32;
        let raw: Vec<f64> = (0..h).map(|i| 3f64.powi(i - (h - 1))).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|r| self.eps * r / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    /// Sample count `M` of the last round.
    #[serde(rename = "M")]
    pub samples: usize,
    pub support: usize,
    /// `‖τ̄‖₁` of the last round.
    pub tau_l1: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub rounds: usize,
    /// Budget doublings per round.
    #[serde(default)]
    pub doublings: Vec<usize>,
    /// SHA-256 of the sampling distribution of the last round.
    #[serde(default)]
    pub rho_hash: String,
    /// Audit error against the input objective, when audited.
    #[serde(default)]
    pub audit_max_error: Option<f64>,
    /// `(n/ε²) ln(n/ε · s_max/s_min) (ln S)³` with `S = (n/ε) ln(2 s_max/s_min)`.
    #[serde(default)]
    pub support_bound: f64,
}

/// `F̃(x) = Σ_k w_k f_{i_k}(⟨a_{i_k}, x⟩ - b_{i_k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifiedModel {
    /// Surviving term indices, ascending.
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub smin: f64,
    pub smax: f64,
    pub eps: f64,
    pub seed: u64,
    /// Valid for every `x`, not just `F(x) ∈ [smin, smax]`.
    #[serde(default)]
    pub global: bool,
    /// Valid on `‖x‖₂ <= radius` instead of a value range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    pub stats: ModelStats,
}

impl SparsifiedModel {
    /// The whole objective with unit weights.
    pub fn identity(m: usize, smin: f64, smax: f64) -> Self {
        SparsifiedModel {
            indices: (0..m).collect(),
            weights: vec![1.0; m],
            smin,
            smax,
            eps: 0.0,
            seed: 0,
            global: true,
            ball_radius: None,
            stats: ModelStats {
                samples: m,
                support: m,
                tau_l1: 0.0,
                alpha: 1.0,
                rounds: 0,
                doublings: vec![],
                rho_hash: String::new(),
                audit_max_error: Some(0.0),
                support_bound: 0.0,
            },
        }
    }

    pub fn support(&self) -> usize {
        self.indices.len()
    }

    /// `F̃(x)` for the instance the model was built from.
    pub fn eval(&self, instance: &ProblemInstance, x: &[f64]) -> f64 {
        instance.weighted_objective(&self.indices, &self.weights, x)
    }

    /// The surviving terms as an instance of their own, with weights folded
    /// into the loss.
    pub fn to_instance(&self, instance: &ProblemInstance) -> Result<ProblemInstance> {
        let a = instance.matrix().select_rows(&self.indices);
        let b: Vec<f64> = self.indices.iter().map(|&i| instance.shift()[i]).collect();
        let loss = instance
            .loss()
            .restrict(&self.indices)
            .scaled(self.weights.clone());
        ProblemInstance::new(a, Some(b), loss)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(self)
    }
}

/// `ρ_i = τ̄_i / ‖τ̄‖₁`.
pub fn sampling_plan(scheme: &WeightScheme) -> Result<Vec<f64>> {
    let total = scheme.score_mass();
    if let Some(i) = scheme.scores.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Internal(format!(
            "row {i} has zero score at every scale"
        )));
    }
    Ok(scheme.scores.iter().map(|s| s / total).collect())
}

/// Scale range covering `[s_min, s_max]` with the lower slack of `4 log₂ m`.
pub fn scale_range(m: usize, s_min: f64, s_max: f64) -> (i32, i32) {
    let jmax = s_max.log2().ceil() as i32;
    let jmin = s_min.log2().floor() as i32 - (4.0 * (m.max(2) as f64).log2()).ceil() as i32;
    (jmin, jmax)
}

/// `⌈C_M ε⁻² ‖τ̄‖₁ (log₂ m)³⌉`.
pub fn sample_budget(m: usize, eps: f64, tau_l1: f64, c_m: f64) -> usize {
    let l = (m.max(2) as f64).log2();
    (c_m * tau_l1 * l * l * l / (eps * eps)).ceil().max(1.0) as usize
}

/// Support bound `(n/ε²) ln(n/ε · s_max/s_min) (ln S)³`, `S = (n/ε) ln(2 s_max/s_min)`.
pub fn support_bound(n: usize, eps: f64, s_min: f64, s_max: f64) -> f64 {
    let nf = n as f64;
    let big_s = nf / eps * (2.0 * s_max / s_min).ln();
    nf / (eps * eps) * (nf / eps * s_max / s_min).ln() * big_s.ln().powi(3)
}

pub(crate) fn check_family(family: &LossFamily) -> Result<()> {
    if matches!(family.kind(), LossKind::Tukey) {
        return Err(Error::Unsupported(
            "raw Tukey losses are bounded; use tukey_sparsify".into(),
        ));
    }
    let k = family.constants();
    if !(k.theta > 0.0) || k.u > 2.0 || !k.lip.is_finite() {
        return Err(Error::config(format!(
            "loss constants outside the supported range (theta={}, u={}, L={})",
            k.theta, k.u, k.lip
        )));
    }
    Ok(())
}

/// Weight scheme over [`scale_range`] for an unshifted instance.
pub fn build_scheme(
    instance: &ProblemInstance,
    s_min: f64,
    s_max: f64,
    eps: f64,
    seed: u64,
) -> Result<WeightScheme> {
    let m = instance.rows();
    let (jmin, jmax) = scale_range(m, s_min, s_max);
    scheme_on_range(instance, jmin, jmax, eps, seed)
}

pub(crate) fn scheme_on_range(
    instance: &ProblemInstance,
    jmin: i32,
    jmax: i32,
    eps: f64,
    seed: u64,
) -> Result<WeightScheme> {
    let family = instance.loss();
    let m = instance.rows();
    let root = StreamSeed::new(seed);
    let top = 2f64.powi(jmax);
    let delta = default_perturbation(family, m, eps, 2f64.powi(jmin), top, 0.5);
    let init = initial_weights(instance.matrix(), family, top, 0.5, delta, root.child(1).0)?;
    let cfg = FindWeightsConfig {
        seed: root.child(2).0,
        beta: Some(init.beta),
        ..FindWeightsConfig::default()
    };
    find_weights(
        instance.matrix(),
        &init.perturbed,
        jmin,
        jmax,
        &init.weights,
        &cfg,
    )
}

/// Multinomial counts for `total` draws from `rho`, by sequential
/// conditional binomials.
pub(crate) fn multinomial_counts(rho: &[f64], total: usize, seed: u64) -> Result<Vec<u64>> {
    let mut rng = StreamSeed::new(seed).stream(0x5a3);
    let m = rho.len();
    let mut tail = vec![0.0; m + 1];
    for i in (0..m).rev() {
        tail[i] = tail[i + 1] + rho[i];
    }
    let mut left = total as u64;
    let mut counts = vec![0u64; m];
    for i in 0..m {
        if left == 0 {
            break;
        }
        if i + 1 == m {
            counts[i] = left;
            break;
        }
        let p = if tail[i] > 0.0 {
            (rho[i] / tail[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = Binomial::new(left, p)
            .map_err(|e| Error::Internal(e.to_string()))?
            .sample(&mut rng);
        counts[i] = c;
        left -= c;
    }
    Ok(counts)
}

fn rho_hash(rho: &[f64]) -> String {
    let mut h = Sha256::new();
    for r in rho {
        h.update(r.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Samples a model from a scheme with `M` fixed by `cfg` and the doubling count.
fn sample_model(
    instance: &ProblemInstance,
    scheme: &WeightScheme,
    eps: f64,
    cfg: &SparsifyConfig,
    doublings: usize,
    seed: u64,
) -> Result<SparsifiedModel> {
    let rho = sampling_plan(scheme)?;
    let m = instance.rows();
    let tau_l1 = scheme.score_mass();
    let base = cfg
        .budget
        .unwrap_or_else(|| sample_budget(m, eps, tau_l1, cfg.c_m));
    let total = base.saturating_mul(1usize << doublings);
    let counts = multinomial_counts(&rho, total, seed)?;
    let mf = total as f64;
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            indices.push(i);
            weights.push(c as f64 / (mf * rho[i]));
        }
    }
    let support = indices.len();
    Ok(SparsifiedModel {
        indices,
        weights,
        smin: cfg.s_min,
        smax: cfg.s_max,
        eps,
        seed: cfg.seed,
        global: false,
        ball_radius: None,
        stats: ModelStats {
            samples: total,
            support,
            tau_l1,
            alpha: scheme.alpha,
            rounds: 1,
            doublings: vec![doublings],
            rho_hash: rho_hash(&rho),
            audit_max_error: None,
            support_bound: support_bound(instance.cols(), eps, cfg.s_min, cfg.s_max),
        },
    })
}

/// One sampling pass from an existing scheme, with `M` from `cfg`.
pub fn sparsify_once(
    instance: &ProblemInstance,
    scheme: &WeightScheme,
    cfg: &SparsifyConfig,
) -> Result<SparsifiedModel> {
    cfg.validate()?;
    if scheme.scores.len() != instance.rows() {
        return Err(Error::Dimension(format!(
            "scheme has {} scores for {} rows",
            scheme.scores.len(),
            instance.rows()
        )));
    }
    sample_model(
        instance,
        scheme,
        cfg.eps,
        cfg,
        0,
        StreamSeed::new(cfg.seed).child(0x0ce).0,
    )
}

/// The unshifted form on which schemes and audits operate.
pub(crate) fn audit_space(instance: &ProblemInstance) -> ProblemInstance {
    if instance.has_shift() {
        instance.lift_shift()
    } else {
        instance.clone()
    }
}

/// Sparsifies with the audit-driven budget rule, over `rounds` bootstrap rounds.
///
/// Each round builds a weight scheme for the current objective, samples a
/// model, audits it against that objective and doubles `M` on failure. The
/// next round sparsifies the previous model. Shifted instances are lifted to
/// `(a_i, b_i)` first.
pub fn sparsify(instance: &ProblemInstance, cfg: &SparsifyConfig) -> Result<SparsifiedModel> {
    cfg.validate()?;
    check_family(instance.loss())?;
    let root = StreamSeed::new(cfg.seed);
    let base = audit_space(instance);
    let mut current = base.clone();
    let mut map: Vec<usize> = (0..instance.rows()).collect();
    let mut carried: Vec<f64> = vec![1.0; instance.rows()];
    let mut doublings_log = Vec::new();
    let mut last: Option<SparsifiedModel> = None;
    let schedule = cfg.round_schedule();

    for (round, &eps_r) in schedule.iter().enumerate() {
        let rs = root.child(round as u64);
        let scheme = build_scheme(&current, cfg.s_min, cfg.s_max, eps_r, rs.child(1).0)?;
        let mut model = None;
        for d in 0..=cfg.max_doublings {
            let cand = sample_model(&current, &scheme, eps_r, cfg, d, rs.child(100 + d as u64).0)?;
            if !cfg.audit {
                model = Some(cand);
                break;
            }
            let report = audit_sparsifier(&current, &cand, &cfg.audit_cfg)?;
            let ok = report.max_rel_error <= eps_r;
            let mut cand = cand;
            cand.stats.audit_max_error = Some(report.max_rel_error);
            model = Some(cand);
            if ok {
                break;
            }
        }
        let model = model.expect("at least one attempt");
        doublings_log.push(model.stats.doublings[0]);
        map = model.indices.iter().map(|&k| map[k]).collect();
        carried = model
            .indices
            .iter()
            .zip(&model.weights)
            .map(|(&k, w)| carried[k] * w)
            .collect();
        current = model.to_instance(&current)?;
        last = Some(model);
    }

    let last = last.expect("schedule is nonempty");
    let mut out = SparsifiedModel {
        indices: map,
        weights: carried,
        smin: cfg.s_min,
        smax: cfg.s_max,
        eps: cfg.eps,
        seed: cfg.seed,
        global: false,
        ball_radius: None,
        stats: ModelStats {
            support: 0,
            rounds: schedule.len(),
            doublings: doublings_log,
            support_bound: support_bound(instance.cols(), cfg.eps, cfg.s_min, cfg.s_max),
            ..last.stats
        },
    };
    out.stats.support = out.indices.len();
    if schedule.len() > 1 && cfg.audit {
        let report = audit_sparsifier(&base, &out, &cfg.audit_cfg)?;
        out.stats.audit_max_error = Some(report.max_rel_error);
    }
    Ok(out)
}
