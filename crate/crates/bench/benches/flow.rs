use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pvar_bench::{rademacher, SEED};
use pvar_core::median_flow::{
    cond_exp_median, direct_d_oracle, interior_grid, median, reversed_driver, FlowMap,
    InnerEnsemble,
};

fn flow_map(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow_map_build");
    for steps in [10_000usize, 100_000] {
        let f = rademacher(1e-5, steps);
        g.bench_with_input(BenchmarkId::from_parameter(steps), &f, |b, f| {
            b.iter(|| FlowMap::from_forward(&f.increments).unwrap())
        });
    }
    g.finish();
}

fn medians(c: &mut Criterion) {
    let f = rademacher(1e-4, 2500);
    let drv = reversed_driver(&f);
    c.bench_function("median_reversed_flow_2500", |b| {
        b.iter(|| median(&drv).unwrap())
    });
    let grid = interior_grid(999);
    let mut g = c.benchmark_group("median_oracle");
    g.sample_size(10);
    g.bench_function("direct_d_2500", |b| {
        b.iter(|| direct_d_oracle(&f.increments, &grid).unwrap())
    });
    g.finish();
}

fn conditional_expectation(c: &mut Criterion) {
    let f = rademacher(1e-5, 100_000);
    let inner = InnerEnsemble::default();
    let mut g = c.benchmark_group("cond_exp");
    g.sample_size(10);
    g.bench_function("inner_1000_dt_1e-3", |b| {
        b.iter(|| cond_exp_median(&f.increments, 1e-5, 1e-3, &inner, SEED).unwrap())
    });
    g.finish();
}

criterion_group!(benches, flow_map, medians, conditional_expectation);
criterion_main!(benches);
