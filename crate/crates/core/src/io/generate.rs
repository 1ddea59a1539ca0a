//! Seeded synthetic instances for tests and benchmarks.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{to_json_string, write_matrix, write_vector};
use crate::error::{Error, Result};
use crate::linalg::RowMatrix;
use crate::rng::StreamSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    /// i.i.d. standard normal entries.
    Gaussian,
    /// Gaussian rows scaled by `10^k`, `k` cycling through `-3..=2`.
    ScaleSeparated,
    /// Gaussian rows in pairs, the second a `1e-6` perturbation of the first.
    NearDuplicate,
    /// `b = A x₀ + 0.01 noise`, with 10% of the shifts replaced by `N(0, 100²)` outliers.
    OutlierRegression,
}

impl std::str::FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown instance kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

/// Ground truth written next to the generated files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: GenSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted_x: Option<Vec<f64>>,
    /// `true` for rows whose shift is an outlier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contamination: Option<Vec<bool>>,
    /// `10^k` row scale per row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_scale_exponents: Option<Vec<i32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub a: RowMatrix,
    pub b: Option<Vec<f64>>,
    pub sidecar: Sidecar,
}

fn gaussian_row(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn generate_instance(spec: &GenSpec) -> Result<GeneratedInstance> {
    if spec.m == 0 || spec.n == 0 {
        return Err(Error::config("generated instances need m, n >= 1"));
    }
    let (m, n) = (spec.m, spec.n);
    let mut rng = StreamSeed::new(spec.seed).stream(0x6e4);
    let mut sidecar = Sidecar {
        spec: spec.clone(),
        planted_x: None,
        contamination: None,
        row_scale_exponents: None,
    };
    let mut b = None;
    let rows: Vec<Vec<f64>> = match spec.kind {
        GenKind::Gaussian => (0..m).map(|_| gaussian_row(&mut rng, n)).collect(),
        GenKind::ScaleSeparated => {
            let exps: Vec<i32> = (0..m).map(|i| (i % 6) as i32 - 3).collect();
            let rows = exps
                .iter()
                .map(|&k| {
                    gaussian_row(&mut rng, n)
                        .into_iter()
                        .map(|v| v * 10f64.powi(k))
                        .collect()
                })
                .collect();
            sidecar.row_scale_exponents = Some(exps);
            rows
        }
        GenKind::NearDuplicate => {
            let mut rows = Vec::with_capacity(m);
            while rows.len() < m {
                let base = gaussian_row(&mut rng, n);
                let twin: Vec<f64> = base
                    .iter()
                    .map(|v| v + 1e-6 * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                rows.push(base);
                if rows.len() < m {
                    rows.push(twin);
                }
            }
            rows
        }
        GenKind::OutlierRegression => {
            let rows: Vec<Vec<f64>> = (0..m).map(|_| gaussian_row(&mut rng, n)).collect();
            let x0 = gaussian_row(&mut rng, n);
            let mut mask = vec![false; m];
            let shift = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let clean = r.iter().zip(&x0).map(|(a, x)| a * x).sum::<f64>()
                        + 0.01 * rng.sample::<f64, _>(StandardNormal);
                    if rng.random::<f64>() < 0.1 {
                        mask[i] = true;
                        100.0 * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        clean
                    }
                })
                .collect();
            b = Some(shift);
            sidecar.planted_x = Some(x0);
            sidecar.contamination = Some(mask);
            rows
        }
    };
    Ok(GeneratedInstance {
        a: RowMatrix::from_rows(&rows)?,
        b,
        sidecar,
    })
}

impl GeneratedInstance {
    /// Writes `matrix.mtx`, `shift.mtx` when there is a shift, and
    /// `truth.json`. Returns the written paths in that order.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut out = vec![dir.join("matrix.mtx")];
        write_matrix(&out[0], &self.a)?;
        if let Some(b) = &self.b {
            let p = dir.join("shift.mtx");
            write_vector(&p, b)?;
            out.push(p);
        }
        let p = dir.join("truth.json");
        std::fs::write(&p, to_json_string(&self.sidecar)?)?;
        out.push(p);
        Ok(out)
    }
}
