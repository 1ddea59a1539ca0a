use glms_core::linalg::{gram, leverage_exact, leverage_sketch, RowMatrix};
use proptest::prelude::*;

/// `m × n` matrix of rank at most `r`, as a product of Gaussian-like factors.
fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> RowMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let left: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..r).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let right: Vec<Vec<f64>> = (0..r)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let rows: Vec<Vec<f64>> = left
        .iter()
        .map(|l| {
            (0..n)
                .map(|j| (0..r).map(|k| l[k] * right[k][j]).sum())
                .collect()
        })
        .collect();
    RowMatrix::from_rows(&rows).unwrap()
}

fn weights(m: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    (0..m)
        .map(|_| 10f64.powf(rng.random_range(-2.0..2.0)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leverage_sums_to_rank(m in 8usize..80, n in 1usize..8, r in 1usize..8, seed in any::<u64>()) {
        let r = r.min(n);
        let a = low_rank(m, n, r, seed);
        let w = weights(m, seed);
        let lev = leverage_exact(&a, &w).unwrap();
        prop_assert_eq!(lev.rank, r);
        let total: f64 = lev.sigma.iter().sum();
        prop_assert!((total - r as f64).abs() <= 1e-8 * n as f64, "{total} vs {r}");
        prop_assert!(lev.sigma.iter().all(|s| *s >= -1e-12 && *s <= 1.0 + 1e-9));
    }

    #[test]
    fn leverage_is_scale_invariant(m in 8usize..60, n in 1usize..6, c in 1e-3f64..1e3, seed in any::<u64>()) {
        let a = low_rank(m, n, n, seed);
        let w = weights(m, seed);
        let wc: Vec<f64> = w.iter().map(|v| v * c).collect();
        let x = leverage_exact(&a, &w).unwrap();
        let y = leverage_exact(&a, &wc).unwrap();
        for (u, v) in x.sigma.iter().zip(&y.sigma) {
            prop_assert!((u - v).abs() <= 1e-8);
        }
    }

    #[test]
    fn gram_matches_weighted_outer_products(m in 1usize..40, n in 1usize..6, seed in any::<u64>()) {
        let a = low_rank(m, n, n, seed);
        let w = weights(m, seed);
        let g = gram(&a, &w).unwrap();
        for j in 0..n {
            for k in 0..n {
                let want: f64 = (0..m).map(|i| w[i] * a.row(i)[j] * a.row(i)[k]).sum();
                prop_assert!((g.matrix()[(j, k)] - want).abs() <= 1e-12 * (1.0 + want.abs()) * m as f64);
            }
        }
    }

    #[test]
    fn sketch_is_a_pure_function_of_its_seed(m in 50usize..120, n in 1usize..5, seed in any::<u64>()) {
        let a = low_rank(m, n, n, seed);
        let w = vec![1.0; m];
        prop_assert_eq!(leverage_sketch(&a, &w, 0.3, seed).unwrap(), leverage_sketch(&a, &w, 0.3, seed).unwrap());
    }
}
