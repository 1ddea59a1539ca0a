//! Huber sparsifiers valid at every scale.
//!
//! A sparsifier accurate on `[1/2, 8m³]` whose weights are at most `2m` is
//! within twice its error everywhere: below the range every sampled term is
//! quadratic, far above it every term is nearly linear, and both regimes
//! scale homogeneously.

use super::{sparsify, SparsifiedModel, SparsifyConfig};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::losses::Thresholds;
use crate::rng::StreamSeed;

const MAX_RESAMPLES: usize = 16;

fn validity_range(m: usize) -> (f64, f64) {
    let mf = m as f64;
    (0.5, 8.0 * mf * mf * mf)
}

fn check_huber(instance: &ProblemInstance, eps: f64) -> Result<()> {
    let loss = instance.loss();
    let unit = matches!(loss.thresholds(), Some(Thresholds::Uniform(t)) if *t == 1.0);
    if !loss.is_huber() || !unit || loss.boost().is_some() || loss.term_scales().is_some() {
        return Err(Error::config(
            "globalization needs the plain Huber loss with unit thresholds",
        ));
    }
    let m = instance.rows() as f64;
    if !(eps > 1.0 / m && eps < 1.0) {
        return Err(Error::config(format!(
            "globalization needs 1/m < eps < 1, got eps={eps} with m={m}"
        )));
    }
    Ok(())
}

/// Marks a Huber model built on `[1/2, 8m³]` with weights at most `2m` as
/// valid everywhere.
pub fn huber_globalize(
    model: SparsifiedModel,
    instance: &ProblemInstance,
) -> Result<SparsifiedModel> {
    check_huber(instance, model.eps)?;
    let m = instance.rows();
    let (lo, hi) = validity_range(m);
    if model.smin != lo || model.smax != hi {
        return Err(Error::config(format!(
            "model range [{}, {}] must be [{lo}, {hi}] for globalization",
            model.smin, model.smax
        )));
    }
    let wmax = model.weights.iter().fold(0.0f64, |a, &b| a.max(b));
    if wmax > 2.0 * m as f64 {
        return Err(Error::config(format!(
            "largest weight {wmax} exceeds 2m = {}",
            2 * m
        )));
    }
    Ok(SparsifiedModel {
        global: true,
        ..model
    })
}

/// Builds a Huber sparsifier on `[1/2, 8m³]`, resampling until every weight
/// is at most `2m`, and marks it global.
pub fn huber_sparsify(instance: &ProblemInstance, cfg: &SparsifyConfig) -> Result<SparsifiedModel> {
    check_huber(instance, cfg.eps)?;
    let m = instance.rows();
    let (lo, hi) = validity_range(m);
    let mut worst = 0.0f64;
    for attempt in 0..MAX_RESAMPLES {
        let seed = if attempt == 0 {
            cfg.seed
        } else {
            StreamSeed::new(cfg.seed).child(0x4b + attempt as u64).0
        };
        let c = SparsifyConfig {
            s_min: lo,
            s_max: hi,
            seed,
            ..cfg.clone()
        };
        let model = sparsify(instance, &c)?;
        let wmax = model.weights.iter().fold(0.0f64, |a, &b| a.max(b));
        if wmax <= 2.0 * m as f64 {
            return huber_globalize(model, instance);
        }
        worst = worst.max(wmax);
    }
    Err(Error::GiveUp {
        attempts: MAX_RESAMPLES,
        detail: format!(
            "largest sampled weight stayed above 2m = {} (worst {worst})",
            2 * m
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RowMatrix;
    use crate::losses::LossFamily;

    fn inst(loss: LossFamily) -> ProblemInstance {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![1.0, (i as f64 * 0.37).sin()])
            .collect();
        ProblemInstance::new(RowMatrix::from_rows(&rows).unwrap(), None, loss).unwrap()
    }

    #[test]
    fn eps_below_inverse_m_is_rejected() {
        let i = inst(LossFamily::huber());
        let cfg = SparsifyConfig::new(1.0 / 40.0, 1.0, 2.0, 1);
        assert!(matches!(huber_sparsify(&i, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn non_huber_rejected() {
        let i = inst(LossFamily::power(1.5).unwrap());
        assert!(huber_sparsify(&i, &SparsifyConfig::new(0.2, 1.0, 2.0, 1)).is_err());
    }

    #[test]
    fn model_is_global() {
        let i = inst(LossFamily::huber());
        let m = huber_sparsify(&i, &SparsifyConfig::new(0.2, 1.0, 2.0, 1)).unwrap();
        assert!(m.global);
        assert_eq!(m.smax, 8.0 * 20f64.powi(3));
        let bad = SparsifiedModel { smin: 1.0, ..m };
        assert!(huber_globalize(bad, &i).is_err());
    }
}
