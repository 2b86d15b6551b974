use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use persistlab_core::exact::{order1_table, order2_table};
use persistlab_core::montecarlo::survival_curve;
use persistlab_core::rng::path_stream;
use persistlab_core::walks::k_intervals;
use persistlab_core::{DistributionSpec, Order, Path, RunConfig};

fn exact_tables(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    g.sample_size(10);
    for n in [32usize, 64, 128] {
        g.bench_with_input(BenchmarkId::new("order2", n), &n, |b, &n| {
            b.iter(|| order2_table(black_box(n)).unwrap())
        });
    }
    g.bench_function("order1/512", |b| {
        b.iter(|| order1_table(black_box(512)).unwrap())
    });
    g.finish();
}

fn mc_kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("survival");
    g.sample_size(10);
    for spec in [
        DistributionSpec::rademacher(),
        DistributionSpec::gaussian(1.0).unwrap(),
    ] {
        let cfg = RunConfig::new(spec, Order::Two, 1024).paths(10_000);
        g.bench_function(spec.to_string(), |b| {
            b.iter(|| survival_curve(black_box(&cfg)).unwrap())
        });
    }
    g.finish();
}

fn intervals(c: &mut Criterion) {
    let spec = DistributionSpec::gaussian(1.0).unwrap();
    let mut rng = path_stream(1, 0);
    for n in [100usize, 10_000] {
        let path = Path::new((0..n).map(|_| spec.sample(&mut rng)).collect()).unwrap();
        c.bench_with_input(BenchmarkId::new("k_intervals", n), &path, |b, p| {
            b.iter(|| k_intervals(black_box(p)))
        });
    }
}

criterion_group!(benches, exact_tables, mc_kernel, intervals);
criterion_main!(benches);
