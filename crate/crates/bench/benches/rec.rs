use bayesinr_core::rec::{astar_decode, astar_encode};
use bayesinr_core::{DiagonalGaussian, RecSettings};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

/// Target and prior over `dim` weights whose KL is `bits`.
fn pair(dim: usize, bits: f64) -> (DiagonalGaussian, DiagonalGaussian) {
    let prior = DiagonalGaussian::new(vec![0.0; dim], vec![1.0; dim]).unwrap();
    let spread = 0.5 * (0.5 - 1.0 - 0.5f64.ln());
    let shift = (2.0 * (bits * std::f64::consts::LN_2 / dim as f64 - spread)).sqrt();
    let target = DiagonalGaussian::new(vec![shift; dim], vec![0.5; dim]).unwrap();
    (target, prior)
}

fn bench_astar(c: &mut Criterion) {
    let settings = RecSettings {
        seed: 7,
        ..RecSettings::default()
    };
    let mut group = c.benchmark_group("astar");
    group.sample_size(10);
    for (dim, bits) in [(8, 8.0), (32, 12.0), (64, 16.0)] {
        let (target, prior) = pair(dim, bits);
        group.bench_with_input(
            BenchmarkId::new("encode", format!("{dim}w")),
            &dim,
            |b, _| b.iter(|| astar_encode(black_box(&target), &prior, &settings, 0, 11).unwrap()),
        );
        let (enc, _) = astar_encode(&target, &prior, &settings, 0, 11).unwrap();
        group.bench_with_input(
            BenchmarkId::new("decode", format!("{dim}w")),
            &dim,
            |b, _| b.iter(|| astar_decode(black_box(&prior), &enc, &settings).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_astar);
criterion_main!(benches);
