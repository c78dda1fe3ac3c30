use boltzlab::collision::{gain_bobylev, CollisionKernel, CollisionOperator, GainScheme, SphereRule};
use boltzlab::transport::free_stream;
use boltzlab::{fourier_v, inverse_fourier_v};
use boltzlab_bench::modulated_gaussian;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn gain(c: &mut Criterion) {
    let f = modulated_gaussian(4.0, 8);
    let k = CollisionKernel::abs_cos(0.0).unwrap();
    let rule = SphereRule::product(8, 16).unwrap();
    let mut g = c.benchmark_group("gain_nv8_rule8x16");
    g.sample_size(10);
    for (name, scheme) in [("direct_spectral", GainScheme::Spectral), ("direct_monotone_cic", GainScheme::MonotoneCic)] {
        let op = CollisionOperator::new(f.grid(), &k, &rule, scheme);
        op.gain(&f, &f).unwrap();
        g.bench_function(name, |b| b.iter(|| op.gain(black_box(&f), black_box(&f)).unwrap()));
    }
    let ft = fourier_v(&f);
    g.bench_function("fourier_bobylev", |b| b.iter(|| gain_bobylev(black_box(&ft), black_box(&ft), &k, &rule).unwrap()));
    let op = CollisionOperator::new(f.grid(), &k, &rule, GainScheme::Spectral);
    g.bench_function("loss_rate", |b| b.iter(|| op.loss_rate(black_box(&f)).unwrap()));
    g.finish();
}

fn transforms(c: &mut Criterion) {
    let f = modulated_gaussian(4.0, 16);
    let mut g = c.benchmark_group("transforms_nx4_nv16");
    g.bench_function("free_stream", |b| b.iter(|| free_stream(black_box(&f), 0.37)));
    g.bench_function("fourier_v", |b| b.iter(|| fourier_v(black_box(&f))));
    let ft = fourier_v(&f);
    g.bench_function("inverse_fourier_v", |b| b.iter(|| inverse_fourier_v(black_box(&ft))));
    g.finish();
}

criterion_group!(benches, gain, transforms);
criterion_main!(benches);
