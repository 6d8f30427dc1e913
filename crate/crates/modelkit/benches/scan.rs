//! Parallel vs sequential throughput of the data-parallel hot loops:
//! singular-value spectrum scans over frequency grids and batched
//! boundary-trace evaluations.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use modelkit::charfun::gamma0_l_resolvent_apply;
use modelkit::extensions::{spectrum_scan, spectrum_scan_seq, BoundaryCondition};
use modelkit::linalg::{c, cr, CVector};
use modelkit::par;
use modelkit::scenarios::build_interval_laplacian;
use num_complex::Complex64;

fn bench_scan(crit: &mut Criterion) {
    let t = build_interval_laplacian(96).unwrap();
    let bc = BoundaryCondition::neumann(2);
    let mut group = crit.benchmark_group("spectrum_scan");
    group.sample_size(10);
    for points in [256usize, 1024] {
        let grid: Vec<Complex64> = (0..points)
            .map(|j| cr(0.5 + 100.0 * j as f64 / points as f64))
            .collect();
        group.bench_with_input(BenchmarkId::new("parallel", points), &grid, |b, g| {
            b.iter(|| spectrum_scan(&t, &bc, g))
        });
        group.bench_with_input(BenchmarkId::new("sequential", points), &grid, |b, g| {
            b.iter(|| spectrum_scan_seq(&t, &bc, g))
        });
    }
    group.finish();
}

fn bench_trace_batch(crit: &mut Criterion) {
    let t = build_interval_laplacian(96).unwrap();
    let h = CVector::from_fn(96, |i, _| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
    let ks: Vec<f64> = (0..2048).map(|j| -100.0 + 0.1 * j as f64).collect();
    let mut group = crit.benchmark_group("boundary_trace_batch");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            par::map(&ks, |&k| {
                gamma0_l_resolvent_apply(&t, c(k, -0.1), &h)
                    .map(|v| v.norm_squared())
                    .unwrap_or(0.0)
            })
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            par::map_seq(&ks, |&k| {
                gamma0_l_resolvent_apply(&t, c(k, -0.1), &h)
                    .map(|v| v.norm_squared())
                    .unwrap_or(0.0)
            })
        })
    });
    group.finish();
}

criterion_group!(benches, bench_scan, bench_trace_batch);
criterion_main!(benches);
