use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fronttrack_bench::{psystem, random_profile, vertical_boundary};
use fronttrack_core::engine::{Engine, RunOptions, SolverParams};
use fronttrack_core::functionals::{phi_between_configs, FunctionalWeights};
use fronttrack_core::pcfn::PcFn;
use fronttrack_core::riemann::{solve_boundary_riemann, solve_riemann, BoundaryCurveKind};
use fronttrack_core::splitting::project_pi_n;
use fronttrack_core::state::State;
use fronttrack_core::system::CurveMode;

fn bench_riemann(c: &mut Criterion) {
    let sys = psystem();
    let left = State(vec![1.0, 0.0]);
    let right = State(vec![1.08, 0.12]);
    c.bench_function("riemann/interior", |b| {
        b.iter(|| {
            solve_riemann(&sys, black_box(&left), black_box(&right), CurveMode::PreferAnalytic)
                .unwrap()
        })
    });
    let bdry = vertical_boundary(&sys, 2.0);
    let g = State(vec![0.08]);
    c.bench_function("riemann/boundary", |b| {
        b.iter(|| {
            solve_boundary_riemann(
                &sys,
                &bdry,
                black_box(&left),
                black_box(&g),
                BoundaryCurveKind::Lax,
                CurveMode::PreferAnalytic,
            )
            .unwrap()
        })
    });
}

fn bench_front_tracking(c: &mut Criterion) {
    let sys = psystem();
    let bdry = vertical_boundary(&sys, 2.0);
    let u0 = random_profile(&sys, 42, 20, 0.3);
    c.bench_function("engine/run-psystem-20-jumps", |b| {
        b.iter(|| {
            let eng = Engine::new(
                &sys,
                &bdry,
                SolverParams::new(0.02, 4e-4),
                FunctionalWeights::default(),
            );
            eng.run(black_box(&u0), &RunOptions::to_time(1.0)).unwrap()
        })
    });
}

fn bench_functionals(c: &mut Criterion) {
    let sys = psystem();
    let bdry = vertical_boundary(&sys, 2.0);
    let eng = Engine::new(&sys, &bdry, SolverParams::new(0.02, 4e-4), FunctionalWeights::default());
    let cfg_u = eng.init(&random_profile(&sys, 1, 12, 0.2)).unwrap();
    let cfg_v = eng.init(&random_profile(&sys, 2, 12, 0.2)).unwrap();
    c.bench_function("functionals/phi", |b| {
        b.iter(|| {
            phi_between_configs(
                &sys,
                &bdry,
                &bdry,
                black_box(&cfg_u),
                black_box(&cfg_v),
                &eng.weights,
                CurveMode::PreferAnalytic,
            )
            .unwrap()
        })
    });
}

fn bench_projection(c: &mut Criterion) {
    let profile = PcFn::new(
        vec![0.015, 0.33, 0.71, 1.234],
        vec![
            State(vec![0.0]),
            State(vec![0.8]),
            State(vec![-0.3]),
            State(vec![0.55]),
            State(vec![0.0]),
        ],
    )
    .unwrap();
    c.bench_function("splitting/project-n40", |b| {
        b.iter(|| project_pi_n(black_box(&profile), 40))
    });
}

criterion_group!(
    benches,
    bench_riemann,
    bench_front_tracking,
    bench_functionals,
    bench_projection
);
criterion_main!(benches);
