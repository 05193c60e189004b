use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rdars_bench::fixture;
use rdars_core::array::{effective_channels, make_mode, PassiveBeam};
use rdars_core::wmmse::{
    build_phase_quadratic, mse_all, power_iteration, solve_at_eta, update_precoders, update_receivers, update_weights,
    wa_solve, zf_init, LiftedPhase,
};

fn inner_updates(c: &mut Criterion) {
    let fx = fixture(32, 128, 20, 20, 1);
    let cfg = &fx.config;
    let mode = make_mode(128, 20, 3, 1).unwrap();
    let phi = PassiveBeam::identity(128);
    let h = effective_channels(&fx.channels, &phi, &mode).unwrap();
    let v = zf_init(&h, cfg.total_power);
    let mu = update_receivers(&h, &v, cfg.noise_power, cfg.total_power).unwrap();
    let zeta = update_weights(&mse_all(&h, &v, &mu, cfg.noise_power)).unwrap();

    c.bench_function("precoder update K=20 L=52", |b| {
        b.iter(|| update_precoders(black_box(&h), &mu, &zeta, cfg.total_power, cfg.bisection_tol, cfg.max_inner_iters).unwrap())
    });
    let w = v.rows(0, 32).into_owned();
    let f = v.rows(32, 20).into_owned();
    c.bench_function("phase quadratic N=128 K=20", |b| {
        b.iter(|| build_phase_quadratic(black_box(&fx.channels), &mode, &w, &f, &mu, &zeta).unwrap())
    });
    let (cm, beta) = build_phase_quadratic(&fx.channels, &mode, &w, &f, &mu, &zeta).unwrap();
    c.bench_function("power iteration N=128", |b| {
        b.iter(|| power_iteration(black_box(&cm), &beta, 0.0, cfg.power_iter_tol, cfg.max_inner_iters, LiftedPhase::from_beam(&phi)))
    });
}

fn full_solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("alternating loop");
    group.sample_size(10);
    for (n_tx, n, a, k) in [(8, 32, 4, 4), (32, 128, 20, 2)] {
        let fx = fixture(n_tx, n, a, k, 2);
        group.bench_with_input(BenchmarkId::new("fixed eta=2", format!("N{n}_K{k}")), &fx, |b, fx| {
            b.iter(|| solve_at_eta(&fx.channels, &fx.config, 2).unwrap())
        });
    }
    let fx = fixture(8, 32, 4, 4, 3);
    group.bench_function("wa_solve N32_K4", |b| b.iter(|| wa_solve(&fx.geometry, &fx.config).unwrap()));
    group.finish();
}

criterion_group!(benches, inner_updates, full_solves);
criterion_main!(benches);
