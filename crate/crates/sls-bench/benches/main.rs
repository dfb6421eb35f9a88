use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sls_bench::{bench_point, bench_spec, schemes};
use sls_core::exact_law::{sample_terminal, ExactLawParams};
use sls_core::linalg::Vec2;
use sls_core::monte_carlo::{simulate_ensemble, EnsembleConfig};
use sls_core::rate::{conjugate_numeric, lmgf_full, rate_full, ConjugateConfig, DEFAULT_TOL};
use sls_core::scheme::propagate_moments;
use sls_core::{Scheme, SpectralVector};

fn bench_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    for scheme in schemes() {
        let cfg = EnsembleConfig {
            scheme: scheme.clone(),
            spec: bench_spec(3),
            m: 3,
            tau: 0.05,
            n_steps: 200,
            samples: 256,
            seed: 0,
            u0: SpectralVector::zero(3),
        };
        group.bench_function(format!("{}/256x200x3", scheme.name()), |b| {
            b.iter(|| simulate_ensemble(black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

fn bench_moments(c: &mut Criterion) {
    c.bench_function("propagate_moments/1e4", |b| {
        b.iter(|| {
            propagate_moments(
                black_box(&Scheme::Midpoint),
                1,
                1.0,
                0.05,
                10_000,
                Vec2::new(0.7, -0.3),
            )
            .unwrap()
        })
    });
}

fn bench_rates(c: &mut Criterion) {
    let spec = bench_spec(4);
    let x = bench_point(4);
    c.bench_function("rate_full/m4", |b| {
        b.iter(|| rate_full(black_box(&Scheme::Midpoint), &spec, 4, 0.05, &x, DEFAULT_TOL).unwrap())
    });
    c.bench_function("conjugate_numeric/m4", |b| {
        b.iter(|| {
            conjugate_numeric(
                |l| lmgf_full(&Scheme::Midpoint, &spec, 4, 0.05, l).unwrap(),
                4,
                black_box(&x),
                ConjugateConfig::default(),
            )
            .unwrap()
        })
    });
}

fn bench_exact_sampler(c: &mut Criterion) {
    let params = ExactLawParams::new(bench_spec(3), SpectralVector::zero(3), 10.0, 3).unwrap();
    c.bench_function("sample_terminal/m3", |b| {
        b.iter_batched(
            || ChaCha8Rng::seed_from_u64(0),
            |mut rng| sample_terminal(black_box(&params), &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_ensemble,
    bench_moments,
    bench_rates,
    bench_exact_sampler
);
criterion_main!(benches);
