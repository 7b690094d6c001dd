//! Benchmarks for the paths that dominate experiment wall time: convolution,
//! Toeplitz solves, Wiener fits, room impulse responses, and the full loss
//! with gradients.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use revsup_core::acoustics::{simulate_rir, simulate_scene, SceneSampler};
use revsup_core::audio::{convolve, convolve_direct};
use revsup_core::wiener::solve_symmetric_toeplitz;
use revsup_core::{
    fit_wiener, ras_loss, AudioBuffer, EstimatePair, FilterMode, FilterSpec, RasOptions,
    SourceKind,
};

fn noise(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn buffer(seed: u64, len: usize) -> AudioBuffer {
    AudioBuffer::new(noise(seed, len), 8000).expect("noise buffer is valid")
}

fn bench_convolve(c: &mut Criterion) {
    let x = noise(1, 8000);
    let h = noise(2, 412);
    let mut group = c.benchmark_group("convolve");
    group.bench_function("direct_8000x412", |b| {
        b.iter(|| convolve_direct(black_box(&x), black_box(&h)).unwrap())
    });
    group.bench_function("fft_8000x412", |b| {
        b.iter(|| convolve(black_box(&x), black_box(&h)).unwrap())
    });
    group.finish();
}

fn bench_toeplitz_solve(c: &mut Criterion) {
    // A loaded autocorrelation column is positive definite, like the real fits.
    let probe = noise(3, 4096);
    let n = 512;
    let mut col = vec![0.0; n];
    for (lag, value) in col.iter_mut().enumerate() {
        *value = probe
            .iter()
            .zip(probe[lag..].iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / probe.len() as f64;
    }
    col[0] *= 1.0 + 1e-4;
    let rhs = noise(4, n);
    c.bench_function("toeplitz_solve_512", |b| {
        b.iter(|| solve_symmetric_toeplitz(black_box(&col), black_box(&rhs)).unwrap())
    });
}

fn bench_wiener_fit(c: &mut Criterion) {
    let input = buffer(5, 8000);
    let target = buffer(6, 8000);
    let spec = FilterSpec::default();
    let mut group = c.benchmark_group("wiener_fit");
    group.sample_size(20);
    group.bench_function("default_taps_8000", |b| {
        b.iter(|| fit_wiener(black_box(&input), black_box(&target), black_box(&spec)).unwrap())
    });
    group.finish();
}

fn bench_simulate_rir(c: &mut Criterion) {
    let config = SceneSampler::new(17).sample();
    let mut group = c.benchmark_group("simulate_rir");
    group.sample_size(20);
    group.bench_function("sampled_room", |b| {
        b.iter(|| simulate_rir(black_box(&config.spec), 0, 0).unwrap())
    });
    group.finish();
}

fn bench_ras_loss(c: &mut Criterion) {
    let config = SceneSampler::new(29).sample();
    let scene = simulate_scene(&config, &[SourceKind::White, SourceKind::White], 3000)
        .expect("bench scene renders");
    let estimates = EstimatePair::new(scene.images[0][0].clone(), scene.images[1][0].clone())
        .expect("images form a valid pair");
    let mixture = &scene.mixtures[0];

    let mut group = c.benchmark_group("ras_loss_with_grad");
    group.sample_size(10);
    for mode in [FilterMode::Independent, FilterMode::Joint] {
        let options = RasOptions {
            mode,
            with_grad: true,
            ..RasOptions::default()
        };
        group.bench_function(mode.name(), |b| {
            b.iter(|| ras_loss(black_box(mixture), black_box(&estimates), black_box(&options)))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_convolve,
    bench_toeplitz_solve,
    bench_wiener_fit,
    bench_simulate_rir,
    bench_ras_loss
);
criterion_main!(benches);
