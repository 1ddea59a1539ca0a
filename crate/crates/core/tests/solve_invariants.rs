use glms_core::losses::{divergence_surrogate, LossFamily};
use glms_core::solve::{glm_oracle, solve_glm, OracleProblem, RefinementConfig, Termination};
use glms_core::{ProblemInstance, RowMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn regression(m: usize, n: usize, p: f64, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let b: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
    ProblemInstance::new(
        RowMatrix::from_rows(&rows).unwrap(),
        Some(b),
        LossFamily::power(p).unwrap(),
    )
    .unwrap()
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// One exact surrogate step on `F(x) = |x|^p + |x - 1|^p` shrinks the
    /// error by `1 - η̂` with `η̂ = (α/c)^{-1/(θ-1)}`.
    #[test]
    fn surrogate_step_contracts_scalar_error(p in prop::sample::select(vec![1.2, 1.5, 1.8, 2.0]), x0 in -50.0f64..50.0) {
        let f = LossFamily::power(p).unwrap();
        let big_f = |x: f64| f.value(0, x) + f.value(0, x - 1.0);
        let f_star = 2.0 * 0.5f64.powf(p);
        let ys = [x0, x0 - 1.0];
        let g: f64 = ys.iter().map(|y| f.deriv(0, *y).unwrap()).sum();
        let sur: Vec<_> = ys.iter().map(|y| divergence_surrogate(&f, 0, *y).unwrap()).collect();
        let dh = |d: f64| g + sur.iter().map(|s| s.deriv(d)).sum::<f64>();
        let span = 4.0 * (x0.abs() + 2.0);
        let d_hat = bisect(-span, span, dh);
        let (alpha, theta, c) = (sur[0].alpha, sur[0].theta, sur[0].c);
        let eta = (alpha / c).powf(-1.0 / (theta - 1.0)).min(1.0);
        let before = big_f(x0) - f_star;
        let after = big_f(x0 + eta * d_hat) - f_star;
        prop_assert!(after <= (1.0 - eta) * before + 1e-12 * big_f(x0), "after {after} before {before} eta {eta}");
    }

    #[test]
    fn oracle_meets_its_contract(p in prop::sample::select(vec![1.3, 1.6, 2.0]), seed in any::<u64>()) {
        let inst = regression(30, 3, p, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let w: Vec<f64> = (0..30).map(|_| rng.random_range(0.1..2.0)).collect();
        let lin: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let prob = OracleProblem { instance: &inst, weights: &w, linear: &lin };
        let x_in = vec![0.0; 3];
        let eps = 1e-4;
        let out = glm_oracle(&prob, &x_in, eps).unwrap();
        let reference = glm_oracle(&prob, &x_in, eps / 100.0).unwrap();
        let g_star = reference.value.min(out.value);
        prop_assert!(out.value - g_star <= eps * (prob.value(&x_in) - g_star) + 1e-14 * g_star.abs());
    }
}

#[test]
fn objective_trace_is_monotone_and_gap_certified() {
    for (p, seed) in [(1.3, 1), (1.5, 2), (1.8, 3)] {
        let inst = regression(80, 4, p, seed);
        let x0 = vec![0.0; 4];
        let f0 = inst.objective(&x0);
        let mut cfg = RefinementConfig::for_family(inst.loss(), f0, 1e-10 * f0).unwrap();
        cfg.rel_tol = Some(1e-10);
        cfg.seed = seed;
        let r = solve_glm(&inst, &x0, &cfg).unwrap();
        assert_eq!(r.termination, Termination::GapBelowTarget, "p={p}");
        let mut prev = f0;
        for s in &r.trace {
            assert!(
                s.objective <= prev,
                "p={p} step {}: {} > {prev}",
                s.iter,
                s.objective
            );
            prev = s.objective;
        }
        assert!(r.gap <= cfg.delta || r.gap <= 1e-10 * r.lower_bound);
        assert!(r.lower_bound <= r.objective);
    }
}

/// Without a line search every accepted step still shrinks `F - F*` by at
/// least `1 - η/2`.
#[test]
fn fixed_steps_contract_error() {
    for p in [1.5, 1.8] {
        let inst = regression(50, 3, p, 17);
        let x0 = vec![0.0; 3];
        let f0 = inst.objective(&x0);
        let mut exact = RefinementConfig::for_family(inst.loss(), f0, 1e-14 * f0).unwrap();
        exact.rel_tol = Some(1e-14);
        let f_star = solve_glm(&inst, &x0, &exact).unwrap().objective;

        let mut cfg = RefinementConfig::for_family(inst.loss(), f0, 1e-14 * f0).unwrap();
        cfg.line_search = false;
        cfg.sparsify = false;
        cfg.max_steps = Some(6);
        let r = solve_glm(&inst, &x0, &cfg).unwrap();
        let mut prev = f0 - f_star;
        for s in r.trace.iter().filter(|s| s.accepted) {
            let err = s.objective - f_star;
            assert!(
                err <= (1.0 - cfg.eta / 2.0) * prev,
                "p={p} step {}: {err} vs {prev}, eta {}",
                s.iter,
                cfg.eta
            );
            prev = err;
        }
    }
}

/// On the dense model the step direction is the Newton direction.
#[test]
fn least_squares_needs_one_step() {
    let inst = regression(60, 4, 2.0, 9);
    let x0 = vec![0.0; 4];
    let f0 = inst.objective(&x0);
    let mut cfg = RefinementConfig::for_family(inst.loss(), f0, 1e-14 * f0).unwrap();
    cfg.max_steps = Some(1);
    cfg.sparsify = false;
    let r = solve_glm(&inst, &x0, &cfg).unwrap();
    let mut exact = cfg.clone();
    exact.max_steps = None;
    exact.rel_tol = Some(1e-14);
    let f_star = solve_glm(&inst, &x0, &exact).unwrap().objective;
    assert_eq!(r.iterations, 1);
    assert!(
        r.objective - f_star <= 1e-10 * (f0 - f_star),
        "{} vs {f_star}",
        r.objective
    );
}
