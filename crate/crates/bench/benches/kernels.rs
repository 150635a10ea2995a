//! Criterion benchmarks for the numerical kernels on the hot paths:
//! the hypergeometric evaluations inside the error-probability
//! integrand, the MPSK kernel integral used per series term, the density
//! series, the capacity series, and raw channel sampling with the ZF SNR.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use zfperf_core::channel::{derive_params, ChannelConfig, FadingCase};
use zfperf_core::mc::{zf_snr, ChannelSampler, ConditionalErrorKernel};
use zfperf_core::perf::{aep_exact_hyp, ergodic_capacity};
use zfperf_core::snr::GammaMixture;
use zfperf_core::special::{hyp1f1_closed, hyp1f1_series, mpsk_mgf_integral};

fn bench_hyp1f1(c: &mut Criterion) {
    let mut group = c.benchmark_group("hyp1f1");
    for sigma in [-5.0, -50.0] {
        group.bench_with_input(BenchmarkId::new("series", sigma), &sigma, |b, &s| {
            b.iter(|| hyp1f1_series(black_box(2), 4, black_box(s), 1e-10, 150).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("closed", sigma), &sigma, |b, &s| {
            b.iter(|| hyp1f1_closed(black_box(2), 4, black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn bench_mpsk_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("mpsk_kernel_integral");
    for n in [1u32, 16, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| mpsk_mgf_integral(black_box(n), black_box(12.0), 4).unwrap())
        });
    }
    group.finish();
}

fn bench_mixture_series(c: &mut Criterion) {
    let mix = GammaMixture::new(1, 4, 1.34, 21.5).unwrap();
    c.bench_function("snr_pdf_series", |b| b.iter(|| mix.pdf(black_box(6.0), 1e-10).unwrap()));
    c.bench_function("snr_outage_series", |b| b.iter(|| mix.outage(black_box(6.6), 1e-10).unwrap()));
}

fn bench_performance_measures(c: &mut Criterion) {
    let mut cfg = ChannelConfig::a1(4, 4, FadingCase::RicianRayleigh);
    cfg.k_factor_db = 1.2;
    cfg.set_gamma_b_db(10.0);
    let params = derive_params(&cfg).unwrap();
    c.bench_function("aep_exact_hyp", |b| b.iter(|| aep_exact_hyp(black_box(&params), 4).unwrap()));
    c.bench_function("ergodic_capacity", |b| b.iter(|| ergodic_capacity(black_box(&params), 1e-5).unwrap()));
}

fn bench_monte_carlo(c: &mut Criterion) {
    let cfg = ChannelConfig::a1(4, 4, FadingCase::RicianRayleigh);
    let params = derive_params(&cfg).unwrap();
    let sampler = ChannelSampler::new(&params).unwrap();
    let kernel = ConditionalErrorKernel::new(4);
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    c.bench_function("sample_and_zf_snr", |b| {
        b.iter(|| {
            let h = sampler.sample(&mut rng);
            zf_snr(black_box(&h), params.gamma_s, 0).unwrap()
        })
    });
    c.bench_function("conditional_error_kernel", |b| b.iter(|| kernel.evaluate(black_box(8.5))));
}

criterion_group!(
    benches,
    bench_hyp1f1,
    bench_mpsk_kernel,
    bench_mixture_series,
    bench_performance_measures,
    bench_monte_carlo
);
criterion_main!(benches);
