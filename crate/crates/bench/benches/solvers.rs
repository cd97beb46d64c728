use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stringnet_core::dominance::dominance_boundary;
use stringnet_core::formation::solve_uniform_sphere;
use stringnet_core::herding::assign_goals;
use stringnet_core::herding::sim::{prepare, simulate_prepared};
use stringnet_core::{ScenarioConfig, Vec3};

fn thomson(c: &mut Criterion) {
    let mut group = c.benchmark_group("thomson");
    group.sample_size(10);
    for n in [12usize, 24, 40] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| solve_uniform_sphere(black_box(n), 30.0, 0, 1e-8).unwrap())
        });
    }
    group.finish();
}

fn dominance(c: &mut Criterion) {
    let cfg = ScenarioConfig::bundled();
    let prep = prepare(&cfg).unwrap();
    let origin = cfg.areas.protected();
    let rel: Vec<Vec3> = cfg.defender_positions().iter().map(|d| d - origin).collect();
    let mut group = c.benchmark_group("dominance");
    group.sample_size(10);
    group.bench_function("boundary_8x16", |b| b.iter(|| dominance_boundary(black_box(&rel), &prep.dominance, 8, 16).unwrap()));
    group.finish();
}

fn assignment(c: &mut Criterion) {
    let cfg = ScenarioConfig::bundled();
    let defenders = cfg.defender_positions();
    let goals: Vec<Vec3> = defenders.iter().rev().map(|p| p * 1.3 + Vec3::new(40.0, -10.0, 5.0)).collect();
    c.bench_function("assign_goals_20", |b| b.iter(|| assign_goals(black_box(&defenders), &goals)));
}

fn simulation(c: &mut Criterion) {
    let mut cfg = ScenarioConfig::bundled();
    cfg.integration.log_every = 0;
    cfg.integration.time_cap = 10.0;
    let prep = prepare(&cfg).unwrap();
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.bench_function("bundled_1000_steps", |b| b.iter(|| simulate_prepared(black_box(&cfg), &prep).unwrap()));
    group.finish();
}

criterion_group!(benches, thomson, dominance, assignment, simulation);
criterion_main!(benches);
