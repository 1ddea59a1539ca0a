//! Run manifests: everything needed to repeat a CLI invocation.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::to_json_string;
use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every resolved parameter, defaults included.
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub inputs: Vec<InputHash>,
    pub version: String,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            command: command.into(),
            params: BTreeMap::new(),
            seed: None,
            inputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timings: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.params
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn get<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.params.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => Ok(Some(serde_json::from_value(v.clone())?)),
        }
    }

    /// Records the file's path and hash.
    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Fails if any input file changed since it was recorded.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let now = sha256_file(&input.path)?;
            if now != input.sha256 {
                return Err(Error::Config(format!(
                    "input {} changed since the manifest was written",
                    input.path
                )));
            }
        }
        Ok(())
    }

    /// Runs `f`, recording its wall-clock time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let mut m = RunManifest::new("sparsify");
        m.param("eps", 0.1).unwrap();
        m.param("s_max", 1.0 / 3.0 * 1e7).unwrap();
        m.param("loss", serde_json::json!({"kind": "gamma", "p": 1.5}))
            .unwrap();
        m.seed = Some(u64::MAX);
        m.time("sample", || ());
        let back = RunManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get::<f64>("eps").unwrap(), Some(0.1));
        assert_eq!(back.get::<f64>("missing").unwrap(), None);
    }

    #[test]
    fn detects_changed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "1\n").unwrap();
        let mut m = RunManifest::new("audit");
        m.add_input(&p).unwrap();
        m.verify_inputs().unwrap();
        std::fs::write(&p, "2\n").unwrap();
        assert!(matches!(m.verify_inputs(), Err(Error::Config(_))));
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
