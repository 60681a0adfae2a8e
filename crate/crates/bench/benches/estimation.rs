use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use optest_core::estimation::optimal_estimate;
use optest_core::fock::coherent_state;
use optest_core::heterodyne::heterodyne_suite;
use optest_core::naimark::naimark_extend;
use optest_core::pom::{coherent_pom, GridSpec};
use optest_core::random::{random_hermitian, random_pom, random_state, suite_rng};
use optest_core::scenarios::{epr_numeric, EprGrid, EprParams};
use optest_core::{DensityOperator, Tolerances, C64};

fn optimal(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimal_estimate");
    for dim in [2, 4, 8, 16] {
        let mut rng = suite_rng(dim as u64);
        let a = random_hermitian(dim, &mut rng);
        let pom = Arc::new(random_pom(dim, 2 * dim, &mut rng));
        let rho = random_state(dim, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| optimal_estimate(black_box(&a), &pom, &rho).unwrap())
        });
    }
    group.finish();
}

fn naimark(c: &mut Criterion) {
    let mut group = c.benchmark_group("naimark_extend");
    for (dim, outcomes) in [(2, 3), (3, 5), (4, 8)] {
        let pom = random_pom(dim, outcomes, &mut suite_rng(1));
        group.bench_with_input(BenchmarkId::new("dim", format!("{dim}x{outcomes}")), &pom, |b, pom| {
            b.iter(|| naimark_extend(black_box(pom)).unwrap())
        });
    }
    group.finish();
}

fn heterodyne(c: &mut Criterion) {
    let beta = C64::new(0.5, 0.2);
    let pom = Arc::new(coherent_pom(30, GridSpec::centered(beta, beta.norm() + 6.0, 41)).unwrap());
    let rho = DensityOperator::pure(&coherent_state(30, beta));
    let tol = Tolerances::default();
    let mut group = c.benchmark_group("heterodyne");
    group.sample_size(10);
    group.bench_function("suite_30x41x41", |b| b.iter(|| heterodyne_suite(black_box(&rho), &pom, &tol).unwrap()));
    group.finish();
}

fn epr(c: &mut Criterion) {
    let params = EprParams::default();
    let mut group = c.benchmark_group("epr_numeric");
    group.sample_size(10);
    for n in [64, 128, 256] {
        let mut grid = EprGrid::recommended(&params);
        grid.points_per_axis = n;
        grid.x_half_width = 6.0 * params.hbar / (2.0 * params.tau);
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, g| {
            b.iter(|| epr_numeric(black_box(&params), g))
        });
    }
    group.finish();
}

criterion_group!(benches, optimal, naimark, heterodyne, epr);
criterion_main!(benches);
