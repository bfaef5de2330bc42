use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use extinction_core::diffusion::{sample_hitting_times, DiffusionSpec};
use extinction_core::exact::{build_log_nu, ExactResults};
use extinction_core::model::{make_params, BDRateSpec};
use extinction_core::sim::sample_extinction;

fn exact_solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for n in [1_000u64, 10_000, 100_000] {
        let p = make_params(n, 1.5).unwrap();
        g.throughput(Throughput::Elements(n));
        g.bench_with_input(BenchmarkId::new("table_and_results", n), &p, |b, p| {
            b.iter(|| ExactResults::compute(&build_log_nu(p).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn simulator(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let p = make_params(10_000, 0.9).unwrap();
    let spec = BDRateSpec::logistic(&p);
    g.bench_function("subcritical_n1e4_x0_2000_x100", |b| {
        b.iter(|| sample_extinction(&spec, 2000, 100, 1, 1e6).unwrap())
    });
    let p = make_params(60, 1.8).unwrap();
    let spec = BDRateSpec::logistic(&p);
    g.bench_function("metastable_n60_x10", |b| {
        b.iter(|| sample_extinction(&spec, 26, 10, 1, 1e6).unwrap())
    });
    g.finish();
}

fn diffusion(c: &mut Criterion) {
    let mut g = c.benchmark_group("diffusion");
    g.sample_size(10);
    let spec = DiffusionSpec::critical(0.0, 1.0);
    g.bench_function("critical_dt1e-4_x100", |b| {
        b.iter(|| sample_hitting_times(&spec, 100, 1).unwrap())
    });
    g.finish();
}

criterion_group!(benches, exact_solver, simulator, diffusion);
criterion_main!(benches);
