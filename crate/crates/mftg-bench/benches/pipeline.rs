//! Benchmarks of the hot paths: kernel evaluation, Gauss-Volterra path
//! construction, backward solves and forward Monte-Carlo stepping.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mftg_bench::{gv_nash_bench_instance, quadratic_bench_instance};
use mftg_core::noise::{gv_nodes_from_white, VolterraKernel};
use mftg_core::rng::{RngFactory, StreamTag};
use mftg_core::sim::{simulate, SimOptions};
use mftg_core::solver::integrate_backward;
use mftg_core::TimeGrid;

fn bench_kernel_eval(c: &mut Criterion) {
    let kernel = VolterraKernel::fbm(0.8).unwrap();
    c.bench_function("kernel_eval_h08", |b| {
        b.iter(|| kernel.eval(black_box(1.0), black_box(0.37)).unwrap())
    });
}

fn bench_gv_paths(c: &mut Criterion) {
    let kernel = VolterraKernel::fbm(0.8).unwrap();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let factory = RngFactory::new(1);
    let white: Vec<Vec<f64>> = (0..16)
        .map(|p| {
            use rand::Rng;
            let mut rng = factory.stream(p, StreamTag::GaussVolterra);
            (0..256).map(|_| rng.gen::<f64>() - 0.5).collect()
        })
        .collect();
    c.bench_function("gv_nodes_16x256", |b| {
        b.iter(|| gv_nodes_from_white(&kernel, &grid, black_box(&white)).unwrap())
    });
}

fn bench_backward_solve(c: &mut Criterion) {
    let def = gv_nash_bench_instance(1000);
    let grid = *def.grid();
    c.bench_function("backward_solve_gv_nash_n1000", |b| {
        b.iter(|| integrate_backward(black_box(&def), &grid).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let def = quadratic_bench_instance(500);
    let sol = integrate_backward(&def, def.grid()).unwrap();
    let opts = SimOptions::new(64, 2, 7);
    c.bench_function("simulate_qq_128x500", |b| {
        b.iter(|| simulate(black_box(&def), &sol, &opts).unwrap())
    });
}

criterion_group!(
    benches,
    bench_kernel_eval,
    bench_gv_paths,
    bench_backward_solve,
    bench_simulate
);
criterion_main!(benches);
