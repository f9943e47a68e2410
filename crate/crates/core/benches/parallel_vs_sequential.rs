//! Weight tables, partition functions and replica sampling on a one-thread
//! pool against the default pool. Built without the `parallel` feature, only
//! the sequential loops are measured.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sprp_core::sampler::sample_replicas;
use sprp_core::{partition_table, weight_table, JumpDensity, ModelParams};

fn params(d: usize, n: usize, rho: f64) -> ModelParams {
    let density = Arc::new(JumpDensity::isotropic(d, 1.0).unwrap());
    ModelParams::with_density(density, 1.0, n, rho).unwrap()
}

/// Runs `f` on a pool of the given size, or inline when the crate is sequential.
fn on_pool<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    #[cfg(feature = "parallel")]
    {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            b = b.num_threads(t);
        }
        b.build().unwrap().install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

fn pools() -> Vec<(&'static str, Option<usize>)> {
    if cfg!(feature = "parallel") {
        vec![("sequential", Some(1)), ("parallel", None)]
    } else {
        vec![("sequential", Some(1))]
    }
}

fn bench_weights(c: &mut Criterion) {
    let mut g = c.benchmark_group("weight_table");
    g.sample_size(10);
    let p = params(3, 20_000, 0.3);
    for (label, threads) in pools() {
        g.bench_function(BenchmarkId::new(label, "d3_n2e4"), |b| b.iter(|| on_pool(threads, || weight_table(&p).unwrap())));
    }
    g.finish();
}

fn bench_partition(c: &mut Criterion) {
    let mut g = c.benchmark_group("partition_table");
    g.sample_size(10);
    let wt = weight_table(&params(2, 20_000, 2.0)).unwrap();
    for (label, threads) in pools() {
        g.bench_function(BenchmarkId::new(label, "d2_n2e4"), |b| b.iter(|| on_pool(threads, || partition_table(&wt).unwrap())));
    }
    g.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_replicas");
    g.sample_size(10);
    let wt = weight_table(&params(3, 5_000, 0.3)).unwrap();
    let pt = partition_table(&wt).unwrap();
    for (label, threads) in pools() {
        g.bench_function(BenchmarkId::new(label, "d3_n5e3_m256"), |b| {
            b.iter(|| on_pool(threads, || sample_replicas(&wt, &pt, 1, 256).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_weights, bench_partition, bench_sampling);
criterion_main!(benches);
