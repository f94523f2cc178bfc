use criterion::{criterion_group, criterion_main, Criterion};
use disclift::datasets::{generate_waveform, WaveformSpec};
use disclift::lifting::fit;
use disclift::TransformConfig;
use std::hint::black_box;

fn bench_waveform_fit(c: &mut Criterion) {
    let train = generate_waveform(&WaveformSpec {
        per_class_count: 100,
        seed: 1,
    })
    .unwrap()
    .pair(1, 2)
    .unwrap();
    let config = TransformConfig::default();
    c.bench_function("fit_waveform_200x32", |b| {
        b.iter(|| fit(black_box(&train), &config).unwrap())
    });

    let (transform, _) = fit(&train, &config).unwrap();
    let test = generate_waveform(&WaveformSpec {
        per_class_count: 1000,
        seed: 2,
    })
    .unwrap();
    c.bench_function("apply_waveform_3000x32", |b| {
        b.iter(|| transform.apply(black_box(test.signals())).unwrap())
    });
    c.bench_function("base_vectors_32", |b| b.iter(|| transform.base_vectors().unwrap()));
}

criterion_group!(benches, bench_waveform_fit);
criterion_main!(benches);
