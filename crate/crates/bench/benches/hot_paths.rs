//! Timings for the paths that dominate a simulation run: the structural
//! diagonalization oracle, the null-space temporal-noise design, the
//! whitened log-det rate at eavesdropper scale, and one full Monte-Carlo
//! trial.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use an_sim_core::an_design::{design_precoders, TemporalRoute};
use an_sim_core::matops::{logdet_rate, logdet_rate_fast, mul, Op};
use an_sim_core::montecarlo::run_point;
use an_sim_core::ofdm::{build_time_ops, diagonalize, draw_channel, Link, SystemConfig};
use an_sim_core::rates::EveStrategy;
use an_sim_core::{CMat, Complex64};

fn reference(n_a: usize) -> SystemConfig {
    SystemConfig {
        n: 64,
        n_cp: 16,
        nu: 16,
        n_a,
        n_b: 2,
        n_e: 2,
        n_s: 2,
        gamma_bob: 100.0,
        gamma_eve: 100.0,
        var_ab: 1.0,
        var_ae: 1.0,
        theta: 0.5,
        alpha: 0.5,
        exact_cp_power: false,
    }
    .validate()
    .unwrap()
}

fn bench_diagonalize(c: &mut Criterion) {
    let cfg = reference(4);
    let r = draw_channel(&cfg, 1);
    let ops = build_time_ops(&r, &cfg);
    c.bench_function("diagonalize_n64_na4", |b| {
        b.iter(|| diagonalize(black_box(&ops), Link::AB).unwrap())
    });
}

fn bench_temporal_design(c: &mut Criterion) {
    let mut group = c.benchmark_group("temporal_design");
    group.sample_size(10);
    for n_a in [4usize, 10] {
        let cfg = reference(n_a);
        group.bench_function(format!("generic_n64_na{n_a}"), |b| {
            b.iter_batched(
                || {
                    let r = draw_channel(&cfg, 1);
                    let ops = build_time_ops(&r, &cfg);
                    (r, ops)
                },
                |(r, ops)| design_precoders(&r, &ops, &cfg, TemporalRoute::Generic, 0).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn bench_logdet(c: &mut Criterion) {
    // 128 = n_e·n at the reference size: the eavesdropper joint-rate matrix.
    let n = 128;
    let mut state = 0x243F_6A88u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    let g = CMat::from_fn(n, n + 8, |_, _| Complex64::new(next(), next()));
    let s = mul(&g, Op::N, &g, Op::H);
    let h = CMat::from_fn(n, n, |_, _| Complex64::new(next(), next()));
    let sigma = &CMat::identity(n, n) + mul(&h, Op::N, &h, Op::H);

    c.bench_function("logdet_rate_128", |b| {
        b.iter(|| logdet_rate(black_box(&s), black_box(&sigma)).unwrap())
    });
    c.bench_function("logdet_rate_fast_128", |b| {
        b.iter(|| logdet_rate_fast(black_box(&s), black_box(&sigma)).unwrap())
    });
}

fn bench_trial(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(20);
    let cfg = reference(4);
    let mut seed = 0u64;
    group.bench_function("one_trial_n64_na4", |b| {
        b.iter(|| {
            seed += 1;
            run_point(black_box(&cfg), 1, seed, EveStrategy::Joint).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_diagonalize, bench_temporal_design, bench_logdet, bench_trial);
criterion_main!(benches);
