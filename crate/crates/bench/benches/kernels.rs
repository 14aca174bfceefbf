use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trapwalk::env::stratified_gap_histogram;
use trapwalk::limitlaw::{char_fn, levy_atoms};
use trapwalk::montecarlo::annealed_mc;
use trapwalk::spectral::{interval_spectrum, principal_eigenpair, EigenOptions};
use trapwalk::survival::{annealed_exact_1d, interval_sum_survival};
use trapwalk::{sample_environment, scaling_params, GapSumSampler};

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for l in [16usize, 256, 4096] {
        g.bench_with_input(BenchmarkId::new("interval_sum_survival", l), &l, |b, &l| {
            b.iter(|| interval_sum_survival(black_box(l), black_box(1e4)))
        });
    }
    g.bench_function("interval_spectrum/64", |b| {
        b.iter(|| interval_spectrum(black_box(64)).unwrap())
    });
    let sites: Vec<_> = (-8i64..=8)
        .flat_map(|x| (-8i64..=8).map(move |y| vec![x, y]))
        .collect();
    g.bench_function("principal_eigenpair/17x17", |b| {
        b.iter(|| principal_eigenpair(black_box(&sites), 2, &EigenOptions::default()).unwrap())
    });
    g.finish();
}

fn environment(c: &mut Criterion) {
    let mut g = c.benchmark_group("env");
    g.bench_function("sample_environment/d2_r100", |b| {
        b.iter(|| sample_environment(2, 100, 0.3, black_box(7)).unwrap())
    });
    g.bench_function("stratified_histogram/1e12", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| {
            stratified_gap_histogram(black_box(1_000_000_000_000), 0.5, 10, &mut rng).unwrap()
        })
    });
    g.finish();
}

fn survival(c: &mut Criterion) {
    let mut g = c.benchmark_group("survival");
    g.bench_function("annealed_exact_1d/t100", |b| {
        b.iter(|| annealed_exact_1d(0.5, black_box(100.0), 1e-12).unwrap())
    });
    g.sample_size(10);
    g.bench_function("annealed_mc/d1_1e4", |b| {
        b.iter(|| annealed_mc(1, 0.5, 10.0, 10_000, black_box(3)).unwrap())
    });
    g.finish();
}

fn limitlaw(c: &mut Criterion) {
    let mut g = c.benchmark_group("limitlaw");
    let sp = scaling_params(0.5, 0.5, 1.0).unwrap();
    let t = sp.time_for_bracket(15).unwrap();
    let sampler = GapSumSampler::new(sp, t).unwrap();
    g.bench_function("gap_sum_sample/b15", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        b.iter(|| sampler.sample(false, &mut rng).unwrap())
    });
    g.bench_function("finite_t_char_fn/b15", |b| {
        b.iter(|| sampler.char_fn(black_box(1.3), false))
    });
    for gamma in [0.5, 0.8] {
        let triple = levy_atoms(gamma, 0.5, 1.0, 5.0, 1e-12).unwrap();
        g.bench_with_input(BenchmarkId::new("levy_char_fn", gamma), &triple, |b, tr| {
            b.iter(|| char_fn(black_box(1.3), tr))
        });
    }
    g.finish();
}

criterion_group!(benches, spectral, environment, survival, limitlaw);
criterion_main!(benches);
