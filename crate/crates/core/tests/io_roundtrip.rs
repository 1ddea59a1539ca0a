use glms_core::io::{
    generate_instance, lift_shift, read_matrix, read_vector, to_json_string, write_matrix,
    write_vector, GenKind, GenSpec, RunManifest,
};
use glms_core::losses::LossFamily;
use glms_core::sparsify::{sparsify, SparsifiedModel, SparsifyConfig};
use glms_core::{ProblemInstance, RowMatrix};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn json_floats_round_trip(v in prop::collection::vec(finite(), 0..20)) {
        let back: Vec<f64> = serde_json::from_str(&to_json_string(&v).unwrap()).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn manifest_round_trips(eps in 1e-6f64..0.5, seed in any::<u64>(), name in "[a-z]{1,12}") {
        let mut m = RunManifest::new(name);
        m.seed = Some(seed);
        m.param("eps", eps).unwrap();
        m.param("schedule", vec![eps / 3.0, eps]).unwrap();
        let text = m.to_json().unwrap();
        let back = RunManifest::from_json(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_json().unwrap(), text);
        prop_assert_eq!(back.get::<f64>("eps").unwrap(), Some(eps));
    }

    #[test]
    fn matrix_files_round_trip(m in 1usize..12, n in 1usize..5, seed in any::<u64>(), mtx in any::<bool>()) {
        let spec = GenSpec { kind: GenKind::Gaussian, m, n, seed };
        let a = generate_instance(&spec).unwrap().a;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if mtx { "a.mtx" } else { "a.csv" });
        write_matrix(&path, &a).unwrap();
        prop_assert_eq!(read_matrix(&path).unwrap(), a.clone());
        let v: Vec<f64> = a.row(0).to_vec();
        let vpath = dir.path().join(if mtx { "v.mtx" } else { "v.csv" });
        write_vector(&vpath, &v).unwrap();
        prop_assert_eq!(read_vector(&vpath).unwrap(), v);
    }
}

#[test]
fn model_json_round_trips() {
    let spec = GenSpec {
        kind: GenKind::OutlierRegression,
        m: 80,
        n: 3,
        seed: 4,
    };
    let g = generate_instance(&spec).unwrap();
    let inst = ProblemInstance::new(g.a, g.b, LossFamily::huber()).unwrap();
    let cfg = SparsifyConfig {
        budget: Some(40),
        ..SparsifyConfig::new(0.3, 1.0, 1e3, 4)
    };
    let model = sparsify(&inst, &cfg).unwrap();
    let text = model.to_json().unwrap();
    let back: SparsifiedModel = serde_json::from_str(&text).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn lift_appends_shift_column() {
    let a = RowMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
    let inst =
        ProblemInstance::new(a, Some(vec![3.0, -4.0]), LossFamily::power(1.5).unwrap()).unwrap();
    let l = lift_shift(&inst);
    assert_eq!(l.matrix().row(0), &[1.0, 2.0, 3.0]);
    assert_eq!(l.matrix().row(1), &[0.0, -1.0, -4.0]);
    assert!(!l.has_shift());
    assert_eq!(
        l.objective(&[0.5, 0.25, -1.0]),
        inst.objective(&[0.5, 0.25])
    );
}

#[test]
fn missing_file_is_a_config_error() {
    let err = read_matrix("/nonexistent/a.csv").unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
