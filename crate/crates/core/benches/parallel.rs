//! One worker thread against the default rayon pool on the data-parallel
//! kernels. Built without the `parallel` feature both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use glms_core::io::{generate_instance, GenKind, GenSpec};
use glms_core::linalg::{gram, leverage_exact};
use glms_core::sparsify::{sparsify, SparsifyConfig};
use glms_core::{LossFamily, ProblemInstance};
use rayon::ThreadPoolBuilder;

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let default = ThreadPoolBuilder::new().build().expect("thread pool");
    let label = format!("default-{}", default.current_num_threads());
    vec![
        (
            "1-thread".into(),
            ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .expect("thread pool"),
        ),
        (label, default),
    ]
}

fn kernels(c: &mut Criterion) {
    let g = generate_instance(&GenSpec {
        kind: GenKind::Gaussian,
        m: 20_000,
        n: 16,
        seed: 1,
    })
    .unwrap();
    let w: Vec<f64> = (0..g.a.rows()).map(|i| 1.0 + (i % 7) as f64).collect();
    let inst = ProblemInstance::new(g.a.clone(), None, LossFamily::power(1.5).unwrap()).unwrap();
    let x: Vec<f64> = (0..16).map(|j| 0.1 * j as f64).collect();

    let mut group = c.benchmark_group("kernels");
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("gram", &label), |b| {
            b.iter(|| pool.install(|| gram(&g.a, &w).unwrap()))
        });
        group.bench_function(BenchmarkId::new("leverage", &label), |b| {
            b.iter(|| pool.install(|| leverage_exact(&g.a, &w).unwrap()))
        });
        group.bench_function(BenchmarkId::new("objective", &label), |b| {
            b.iter(|| pool.install(|| inst.objective(&x)))
        });
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let g = generate_instance(&GenSpec {
        kind: GenKind::Gaussian,
        m: 2_000,
        n: 6,
        seed: 2,
    })
    .unwrap();
    let inst = ProblemInstance::new(g.a, None, LossFamily::huber()).unwrap();
    let cfg = SparsifyConfig {
        audit: false,
        ..SparsifyConfig::new(0.2, 1.0, 1e6, 3)
    };

    let mut group = c.benchmark_group("sparsify");
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("huber-2000x6", &label), |b| {
            b.iter(|| pool.install(|| sparsify(&inst, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels, end_to_end);
criterion_main!(benches);
