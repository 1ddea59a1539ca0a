//! File ingestion, synthetic instances, JSON output and run manifests.

mod generate;
mod manifest;
mod matrix;

pub use generate::{generate_instance, GenKind, GenSpec, GeneratedInstance, Sidecar};
pub use manifest::{sha256_file, sha256_hex, InputHash, RunManifest, StageTiming};
pub use matrix::{load_instance, read_matrix, read_vector, write_matrix, write_vector};

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::Result;
use crate::instance::ProblemInstance;

/// Rows `(a_i, b_i)` with zero shift; see [`ProblemInstance::lift_shift`].
pub fn lift_shift(instance: &ProblemInstance) -> ProblemInstance {
    instance.lift_shift()
}

/// Compact JSON whose floats always carry 17 significant digits.
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes to compact JSON, floats as `d.dddddddddddddddde±x`, with a
/// trailing newline. Non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        let v = vec![0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0];
        let s = to_json_string(&v).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn integers_and_nonfinite() {
        #[derive(Serialize)]
        struct T {
            n: usize,
            x: f64,
        }
        assert_eq!(
            to_json_string(&T { n: 3, x: f64::NAN }).unwrap(),
            "{\"n\":3,\"x\":null}\n"
        );
    }
}
