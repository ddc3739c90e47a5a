//! Fan-out workloads on the full rayon pool versus a one-thread pool.
//!
//! Build with `--no-default-features` to benchmark the plain sequential loops
//! instead; both groups then run the same code path.

use batstab::convergence::{estimate_hit_probability, ConvergenceTarget};
use batstab::dynamics::rasterize_region;
use batstab::engine::BaParams;
use batstab::objective::Objective;
use batstab::parallel::with_jobs;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn modes() -> [(&'static str, Option<usize>); 2] {
    [("sequential", Some(1)), ("parallel", None)]
}

fn raster(c: &mut Criterion) {
    let mut group = c.benchmark_group("rasterize_region");
    for (label, jobs) in modes() {
        group.bench_function(BenchmarkId::new(label, "step=0.01"), |b| {
            b.iter(|| {
                with_jobs(jobs, || {
                    rasterize_region((-2.0, 2.0), (-1.0, 5.0), black_box(0.01)).unwrap()
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

fn hit_probability(c: &mut Criterion) {
    let spec = Objective::Sphere.spec(2);
    let params = BaParams {
        t_max: 200,
        ..BaParams::stable_reference()
    };
    let target = ConvergenceTarget::new(0.0, 1e-2);
    let mut group = c.benchmark_group("estimate_hit_probability");
    group.sample_size(10);
    for (label, jobs) in modes() {
        group.bench_function(BenchmarkId::new(label, "replicas=64"), |b| {
            b.iter(|| {
                with_jobs(jobs, || {
                    estimate_hit_probability(&spec, &params, &target, black_box(64)).unwrap()
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, raster, hit_probability);
criterion_main!(benches);
