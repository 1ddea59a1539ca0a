use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::{dot, gram, RowMatrix};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::StreamSeed;

/// Failure probability budgeted per sketched leverage call.
pub const SKETCH_FAILURE_PROB: f64 = 1e-6;

/// Leverage scores `σ_i = w_i a_iᵀ M_w⁺ a_i` and `τ_i = a_iᵀ M_w⁺ a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Leverage {
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
    pub rank: usize,
    /// False when the scores come from a sketch.
    pub exact: bool,
}

fn whitened_norms(a: &RowMatrix, whitener: &[Vec<f64>], mix: Option<&[Vec<f64>]>) -> Vec<f64> {
    par::map_indexed(a.rows(), |i| {
        let row = a.row(i);
        let v: Vec<f64> = whitener.iter().map(|r| dot(r, row)).collect();
        match mix {
            None => dot(&v, &v),
            // ‖Lᵀ v‖² with L lower triangular, stored by rows.
            Some(l) => {
                let r = v.len();
                let mut s = 0.0;
                for j in 0..r {
                    let mut c = 0.0;
                    for (i, li) in l.iter().enumerate().skip(j) {
                        c += li[j] * v[i];
                    }
                    s += c * c;
                }
                s
            }
        }
    })
}

/// Condition number of `M_w` above which the whitener gets a second pass.
const REWHITEN_CONDITION: f64 = 1e4;

/// Whitener `R` with `‖R a‖² = aᵀ M_w⁺ a`, and the rank of `M_w`.
///
/// Rows whitened once have a Gram matrix `I + E` with `‖E‖` growing like
/// `κ(M_w)·ε`, so ill-conditioned weightings are whitened a second time.
fn whitener_for(a: &RowMatrix, w: &[f64]) -> Result<(Vec<Vec<f64>>, usize)> {
    let g = gram(a, w)?;
    let first = g.whitener();
    if g.condition() <= REWHITEN_CONDITION || first.is_empty() {
        return Ok((first, g.rank()));
    }
    let r = first.len();
    let rows = par::map_indexed(a.rows(), |i| {
        first.iter().map(|f| dot(f, a.row(i))).collect::<Vec<f64>>()
    });
    let whitened = RowMatrix::new(a.rows(), r, rows.concat())?;
    let second = gram(&whitened, w)?.whitener();
    let n = a.cols();
    let composed = second
        .iter()
        .map(|s| {
            (0..n)
                .map(|j| s.iter().zip(&first).map(|(sk, fk)| sk * fk[j]).sum())
                .collect()
        })
        .collect();
    Ok((composed, g.rank()))
}

/// Exact scores through the pseudo-inverse of `M_w`.
pub fn leverage_exact(a: &RowMatrix, w: &[f64]) -> Result<Leverage> {
    let (whitener, rank) = whitener_for(a, w)?;
    let tau = whitened_norms(a, &whitener, None);
    let sigma: Vec<f64> = tau.iter().zip(w).map(|(t, wi)| t * wi).collect();
    if let Some(i) = sigma.iter().position(|s| *s > 1.0 + 1e-6) {
        return Err(Error::Internal(format!(
            "leverage score {} of row {i} exceeds 1",
            sigma[i]
        )));
    }
    Ok(Leverage {
        sigma,
        tau,
        rank,
        exact: true,
    })
}

/// Number of Gaussian sketch rows for accuracy `eps` over `m` scores.
pub fn sketch_rows(m: usize, eps: f64) -> usize {
    (40.0 / (eps * eps) * (m as f64 / SKETCH_FAILURE_PROB).ln()).ceil() as usize
}

/// `(1 ± ε)` scores from a `k × n` Gaussian sketch of `W^{1/2} A M_w^{-1/2}`.
///
/// The sketched scores depend on the Gaussian matrix `G` only through `GᵀG`,
/// which is drawn directly from its Wishart law by the Bartlett decomposition.
/// The result has the same distribution as the explicit sketch at `O(n²)`
/// instead of `O(kn)` random draws.
pub fn leverage_sketch(a: &RowMatrix, w: &[f64], eps: f64, seed: u64) -> Result<Leverage> {
    if !(eps > 0.0 && eps <= 1.0 / 3.0) {
        return Err(Error::config(format!(
            "sketch accuracy must lie in (0, 1/3], got {eps}"
        )));
    }
    let g = gram(a, w)?;
    let whitener = g.whitener();
    let r = whitener.len();
    let k = sketch_rows(a.rows(), eps).max(r);
    let mut rng = StreamSeed::new(seed).stream(0x1e7);
    let mut l = vec![vec![0.0; r]; r];
    for (i, li) in l.iter_mut().enumerate() {
        let chi = ChiSquared::new((k - i) as f64).map_err(|e| Error::Internal(e.to_string()))?;
        li[i] = chi.sample(&mut rng).sqrt();
        for lij in li.iter_mut().take(i) {
            *lij = StandardNormal.sample(&mut rng);
        }
    }
    let kf = k as f64;
    let tau: Vec<f64> = whitened_norms(a, &whitener, Some(&l))
        .into_iter()
        .map(|v| v / kf)
        .collect();
    let sigma = tau.iter().zip(w).map(|(t, wi)| t * wi).collect();
    Ok(Leverage {
        sigma,
        tau,
        rank: g.rank(),
        exact: false,
    })
}

/// Exact scores when `eps == 0`, `m <= 4n` or `m <= 256`; sketched otherwise.
pub fn leverage_auto(a: &RowMatrix, w: &[f64], eps: f64, seed: u64) -> Result<Leverage> {
    let (m, n) = (a.rows(), a.cols());
    if eps == 0.0 || m <= 4 * n || m <= 256 {
        leverage_exact(a, w)
    } else {
        leverage_sketch(a, w, eps, seed)
    }
}
