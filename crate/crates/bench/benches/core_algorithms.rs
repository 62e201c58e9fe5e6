use avoidlab_bench::{bench_grid, tiny_task};
use avoidlab_core::grid::build_task;
use avoidlab_core::learner::{is_settled, run, RunConfig};
use avoidlab_core::oracle::{brute_force_summary, maximal_policy};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn oracle_benches(c: &mut Criterion) {
    let tiny = tiny_task(3);
    c.bench_function("maximal_policy/tiny", |b| {
        b.iter(|| maximal_policy(black_box(&tiny)))
    });
    c.bench_function("brute_force_summary/tiny", |b| {
        b.iter(|| brute_force_summary(black_box(&tiny)).unwrap())
    });

    let grid = build_task(&bench_grid()).unwrap();
    c.bench_function("maximal_policy/grid", |b| {
        b.iter(|| maximal_policy(black_box(&grid)))
    });
}

fn grid_benches(c: &mut Criterion) {
    let problem = bench_grid();
    c.bench_function("build_task/grid", |b| {
        b.iter(|| build_task(black_box(&problem)).unwrap())
    });
}

fn learner_benches(c: &mut Criterion) {
    let tiny = tiny_task(3);
    c.bench_function("run/tiny_10k_steps", |b| {
        b.iter(|| {
            run(
                black_box(&tiny),
                RunConfig { max_steps: 10_000, external_restart_every: Some(7), ..RunConfig::with_seed(1) },
            )
            .unwrap()
        })
    });

    let grid = build_task(&bench_grid()).unwrap();
    c.bench_function("run/grid_50k_steps", |b| {
        b.iter(|| {
            run(
                black_box(&grid),
                RunConfig { max_steps: 50_000, external_restart_every: Some(80), ..RunConfig::with_seed(1) },
            )
            .unwrap()
        })
    });
    let report = run(
        &grid,
        RunConfig { max_steps: 200_000, external_restart_every: Some(80), ..RunConfig::with_seed(1) },
    )
    .unwrap();
    c.bench_function("is_settled/grid", |b| {
        b.iter(|| is_settled(black_box(&grid), black_box(&report.allowed)))
    });
}

criterion_group!(benches, oracle_benches, grid_benches, learner_benches);
criterion_main!(benches);
