use bayesinr_core::model::FrozenWeights;
use bayesinr_core::optim::VariationalParams;
use bayesinr_core::{BlockPartition, DiagonalGaussian, Inr, InrConfig, SignalDescriptor};
use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_network(c: &mut Criterion) {
    let config = InrConfig::cifar();
    let d = config.param_count();
    let inr = Inr::new(config.clone(), 1).unwrap();
    let desc = SignalDescriptor::Image {
        height: 32,
        width: 32,
        channels: 3,
    };
    let values: Vec<f64> = (0..desc.points() * 3)
        .map(|i| (i % 17) as f64 / 16.0)
        .collect();
    let batch = inr.embed(&desc.batch(values).unwrap()).unwrap();
    let weights = config.init_weights(2);
    let params = VariationalParams::with_variance(weights.values.clone(), 1e-6);
    let prior = DiagonalGaussian::new(vec![0.0; d], config.init_variance()).unwrap();
    let blocks = BlockPartition::single(d);
    let frozen = FrozenWeights::none(d);

    c.bench_function("forward_32x32", |b| {
        b.iter(|| inr.forward_embedded(black_box(&weights), &batch).unwrap())
    });
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    c.bench_function("loss_and_grads_32x32", |b| {
        b.iter(|| {
            inr.loss_and_grads(
                black_box(&params),
                &prior,
                &batch,
                &[1.0],
                &blocks,
                &frozen,
                &mut rng,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_network);
criterion_main!(benches);
