use glms_core::linalg::RowMatrix;
use glms_core::losses::LossFamily;
use glms_core::sparsify::{build_scheme, sparsify, sparsify_once, SparsifyConfig};
use glms_core::ProblemInstance;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(m: usize, n: usize, shift: bool, loss: LossFamily, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            // A few heavy rows so the sampling plan is far from uniform.
            let scale = if i % 7 == 0 { 20.0 } else { 1.0 };
            (0..n)
                .map(|_| scale * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let b = shift.then(|| (0..m).map(|_| rng.random_range(-2.0..2.0)).collect());
    ProblemInstance::new(RowMatrix::from_rows(&rows).unwrap(), b, loss).unwrap()
}

#[test]
fn fixed_budget_samples_are_unbiased() {
    let inst = instance(40, 2, false, LossFamily::power(1.5).unwrap(), 3);
    let scheme = build_scheme(&inst, 1.0, 1e4, 0.2, 11).unwrap();
    let probes = [vec![1.0, 0.0], vec![0.3, -2.0], vec![-5.0, 4.0]];
    let trials = 4000;
    for x in &probes {
        let exact = inst.objective(x);
        let vals: Vec<f64> = (0..trials)
            .map(|t| {
                let cfg = SparsifyConfig {
                    budget: Some(12),
                    audit: false,
                    ..SparsifyConfig::new(0.2, 1.0, 1e4, t)
                };
                sparsify_once(&inst, &scheme, &cfg).unwrap().eval(&inst, x)
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 4.0 * se,
            "x={x:?}: mean {mean} vs {exact}, se {se}"
        );
    }
}

#[test]
fn sparsify_is_deterministic_in_seed() {
    let inst = instance(60, 3, true, LossFamily::huber(), 5);
    let cfg = SparsifyConfig {
        budget: Some(30),
        ..SparsifyConfig::new(0.25, 1.0, 1e3, 99)
    };
    let a = sparsify(&inst, &cfg).unwrap();
    let b = sparsify(&inst, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// A model of a shifted instance evaluates the same at `x` as on the
    /// lifted instance at `(x, -1)`.
    #[test]
    fn lifted_model_matches_shifted_objective(m in 10usize..40, n in 1usize..4, seed in any::<u64>(), x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let inst = instance(m, n, true, LossFamily::power(1.3).unwrap(), seed);
        let x = &x[..n];
        let lifted = inst.lift_shift();
        let mut xl = x.to_vec();
        xl.push(-1.0);
        let direct = inst.objective(x);
        prop_assert!((lifted.objective(&xl) - direct).abs() <= 1e-12 * (1.0 + direct));

        let cfg = SparsifyConfig { budget: Some(m / 2), audit: false, ..SparsifyConfig::new(0.3, 0.5, 1e3, seed) };
        let model = sparsify(&inst, &cfg).unwrap();
        let u = model.eval(&inst, x);
        prop_assert!((model.eval(&lifted, &xl) - u).abs() <= 1e-12 * (1.0 + u));
        prop_assert!(model.indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(model.weights.iter().all(|w| *w > 0.0 && w.is_finite()));
        prop_assert_eq!(model.support(), model.stats.support);
    }
}
