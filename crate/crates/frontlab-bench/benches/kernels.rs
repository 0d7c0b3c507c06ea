use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use frontlab::diagnostics::{trace_interfaces_with, TraceOptions};
use frontlab::numerics::ImplicitDiffusion;
use frontlab::pdesim::{simulate, InitialCondition, SimConfig, SimState, Stepper, WindowPolicy};
use frontlab::reaction::make_cubic_bistable;
use frontlab::wavesolve::front_speed;

fn diffusion_solve(c: &mut Criterion) {
    let n = 4096;
    let solver = ImplicitDiffusion::new(n, 0.5);
    let u0: Vec<f64> = (0..n).map(|j| 1.0 - j as f64 / n as f64).collect();
    c.bench_function("implicit_diffusion_4096", |b| {
        b.iter_batched_ref(|| u0.clone(), |u| solver.solve(black_box(u), 1.0, 0.0), BatchSize::SmallInput)
    });
}

fn imex_step(c: &mut Criterion) {
    let spec = make_cubic_bistable(0.25).unwrap();
    let mut cfg = SimConfig::new(-100.0, 100.0, 1.0, InitialCondition::FrontLike { a: 0.0, y: 0.0, mu: 1.0, beta: 1.0 });
    cfg.window = WindowPolicy::Fixed { tol: 1.0 };
    let state = SimState::new(&cfg, &spec).unwrap();
    let mut stepper = Stepper::new(&spec, &state).unwrap();
    c.bench_function("imex_step_cubic_4001", |b| {
        b.iter_batched_ref(|| state.clone(), |s| stepper.step(black_box(s)).unwrap(), BatchSize::SmallInput)
    });
}

fn shooting(c: &mut Criterion) {
    let spec = make_cubic_bistable(0.3).unwrap();
    c.bench_function("front_speed_cubic", |b| b.iter(|| front_speed(black_box(&spec), 1e-10).unwrap().0));
}

fn tracing(c: &mut Criterion) {
    let spec = make_cubic_bistable(0.25).unwrap();
    let mut cfg = SimConfig::new(-40.0, 40.0, 40.0, InitialCondition::FrontLike { a: 0.0, y: 0.0, mu: 1.0, beta: 1.0 });
    cfg.snapshot_stride = 0.5;
    let traj = simulate(&cfg, &spec).unwrap();
    let opts = TraceOptions::descriptive(0.25, 0.5, vec![0.1, 0.01, 0.001]);
    c.bench_function("trace_interfaces_81_snapshots", |b| {
        b.iter(|| trace_interfaces_with(black_box(&traj.snapshots), &opts))
    });
}

criterion_group!(benches, diffusion_solve, imex_step, shooting, tracing);
criterion_main!(benches);
