//! Tukey sparsifiers on a norm ball.
//!
//! `min{z², 1}` is bounded, so it has no value range to sample on. Rows are
//! instead sampled with the scheme of the proxy `min{|z|, |z|^η}²` over the
//! scales `|j| <= ⌈2 log₂ m⌉`, and the result is valid on `‖x‖₂ <= R` for
//! declared polynomial bounds on the row and point norms.

use serde::{Deserialize, Serialize};

use super::{
    audit_ball, audit_space, sample_model, scheme_on_range, SparsifiedModel, SparsifyConfig,
};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::losses::{LossFamily, LossKind};
use crate::rng::StreamSeed;

/// Points audited on the ball per attempt.
const BALL_POINTS: usize = 400;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TukeyConfig {
    /// Every `‖(a_i, b_i)‖₂` must be at most this.
    pub row_norm_bound: Option<f64>,
    /// Radius of the validity ball.
    pub x_norm_bound: Option<f64>,
    /// Proxy exponent; `(ln n)^(-1/3)` when unset.
    pub eta: Option<f64>,
}

fn scale_span(m: usize) -> i32 {
    (2.0 * (m.max(2) as f64).log2()).ceil() as i32
}

/// Samples Tukey terms with the proxy scheme and audits on the ball.
pub fn tukey_sparsify(
    instance: &ProblemInstance,
    cfg: &SparsifyConfig,
    tukey: &TukeyConfig,
) -> Result<SparsifiedModel> {
    cfg.validate()?;
    if !matches!(instance.loss().kind(), LossKind::Tukey) {
        return Err(Error::config("tukey_sparsify needs the Tukey loss"));
    }
    let (Some(row_bound), Some(radius)) = (tukey.row_norm_bound, tukey.x_norm_bound) else {
        return Err(Error::config(
            "tukey_sparsify needs both a row norm bound and an x norm bound",
        ));
    };
    if !(row_bound > 0.0 && radius > 0.0 && row_bound.is_finite() && radius.is_finite()) {
        return Err(Error::config("norm bounds must be positive and finite"));
    }
    let lifted = audit_space(instance);
    let a = lifted.matrix();
    if let Some(i) = (0..a.rows()).find(|&i| a.row_norm(i) > row_bound) {
        return Err(Error::config(format!(
            "row {i} has norm {} above the declared bound {row_bound}",
            a.row_norm(i)
        )));
    }
    let eta = tukey
        .eta
        .unwrap_or_else(|| LossFamily::default_tukey_eta(instance.cols()));
    let proxy = lifted.with_loss(LossFamily::tukey_proxy(eta)?)?;
    let m = instance.rows();
    let span = scale_span(m);
    let root = StreamSeed::new(cfg.seed);
    let scheme = scheme_on_range(&proxy, -span, span, cfg.eps, root.child(1).0)?;

    let mut model = None;
    for d in 0..=cfg.max_doublings {
        let mut cand = sample_model(
            instance,
            &scheme,
            cfg.eps,
            cfg,
            d,
            root.child(100 + d as u64).0,
        )?;
        cand.smin = 2f64.powi(-span);
        cand.smax = 2f64.powi(span);
        cand.ball_radius = Some(radius);
        if !cfg.audit {
            model = Some(cand);
            break;
        }
        let report = audit_ball(
            instance,
            &cand,
            radius,
            BALL_POINTS,
            root.child(200 + d as u64).0,
        )?;
        cand.stats.audit_max_error = Some(report.max_rel_error);
        let ok = report.max_rel_error <= cfg.eps;
        model = Some(cand);
        if ok {
            break;
        }
    }
    Ok(model.expect("at least one attempt"))
}
