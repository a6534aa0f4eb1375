mod common;

use bayesinr_core::error::Error;
use bayesinr_core::io::SignalDescriptor;
use bayesinr_core::pipeline::{
    compress, decompress, fit_posterior, measure, progressive_encode, psnr, CodecSettings,
    CompressedObject, FineTuneSettings, StreamHeader,
};
use bayesinr_core::rec::{index_bits, sample_count, BitString, IndexHistogram, DEFAULT_SAMPLE_CAP};
use common::*;

fn fast_fine_tune() -> FineTuneSettings {
    FineTuneSettings {
        fit_iterations: 4000,
        ..quick_fine_tune()
    }
}

#[test]
fn single_block_round_trip() {
    let learned = fixture_prior_with(1e-1);
    let codec = CodecSettings::from_seed(3, 16.0);
    assert_eq!(
        learned
            .model
            .partition(16.0, codec.permutation_seed)
            .unwrap()
            .len(),
        1
    );
    let datum = image(6);
    let c = compress(
        &datum,
        &descriptor(),
        &learned.model,
        &fast_fine_tune(),
        &codec,
    )
    .unwrap();
    assert_eq!(c.outcome.encoded.len(), 1);
    let bytes = c.outcome.object.to_bytes().unwrap();
    let decoded = decompress(
        &CompressedObject::from_bytes(&bytes).unwrap(),
        &learned.model,
    )
    .unwrap();
    assert_eq!(decoded, c.outcome.reconstruction);
}

#[test]
fn stream_from_another_prior_is_rejected() {
    let learned = fixture_prior();
    let c = compress(
        &image(5),
        &descriptor(),
        &learned.model,
        &fast_fine_tune(),
        &CodecSettings::from_seed(4, 16.0),
    )
    .unwrap();
    let mut other = learned.model.clone();
    other.set_index_histogram(Some(IndexHistogram::from_indices([1, 2, 3])));
    assert_ne!(other.content_hash(), learned.model.content_hash());
    assert!(matches!(
        decompress(&c.outcome.object, &other),
        Err(Error::PriorMismatch)
    ));
}

#[test]
fn truncated_payload_is_an_error() {
    let learned = fixture_prior();
    let c = compress(
        &image(5),
        &descriptor(),
        &learned.model,
        &fast_fine_tune(),
        &CodecSettings::from_seed(5, 16.0),
    )
    .unwrap();
    let mut obj = c.outcome.object.clone();
    let keep = obj.payload.len() - 9;
    let bytes = obj.payload.as_bytes()[..keep.div_ceil(8)].to_vec();
    obj.payload = BitString::from_bytes(bytes, keep).unwrap();
    assert!(matches!(
        decompress(&obj, &learned.model),
        Err(Error::CorruptStream(_))
    ));

    let full = c.outcome.object.to_bytes().unwrap();
    assert!(CompressedObject::from_bytes(&full[..full.len() - 5]).is_err());
}

#[test]
fn encoded_blocks_never_move_again() {
    let learned = fixture_prior();
    let model = &learned.model;
    let codec = CodecSettings {
        record_snapshots: true,
        ..CodecSettings::from_seed(6, 16.0)
    };
    let partition = model.partition(16.0, codec.permutation_seed).unwrap();
    let fine = fast_fine_tune();
    let fit = fit_posterior(&image(7), model, &partition, &fine, codec.noise_seed).unwrap();
    let out = progressive_encode(
        &image(7),
        &descriptor(),
        fit,
        model,
        &partition,
        &fine,
        &codec,
    )
    .unwrap();
    assert_eq!(out.snapshots.len(), partition.len());
    for (k, block) in partition.blocks().iter().enumerate() {
        for later in &out.snapshots[k..] {
            for &j in block {
                assert_eq!(
                    later.mean[j].to_bits(),
                    out.weights.values[j].to_bits(),
                    "block {k} weight {j}"
                );
            }
        }
    }
}

#[test]
fn index_widths_follow_sample_counts() {
    let learned = fixture_prior();
    let mut codec = CodecSettings::from_seed(8, 16.0);
    codec.rec.t_bits = 2.0;
    let c = compress(
        &image(5),
        &descriptor(),
        &learned.model,
        &fast_fine_tune(),
        &codec,
    )
    .unwrap();
    let out = &c.outcome;
    for (enc, &delta) in out.encoded.iter().zip(&out.block_kl_bits) {
        let n = sample_count(delta, 2.0, DEFAULT_SAMPLE_CAP, enc.block_id).unwrap();
        assert_eq!(enc.n_samples, n);
        assert!((1..=n).contains(&enc.index));
        assert_eq!(out.object.header.index_widths[enc.block_id], index_bits(n));
    }
    let expected: usize = out
        .object
        .header
        .index_widths
        .iter()
        .map(|&w| w as usize)
        .sum();
    assert_eq!(out.object.payload_bits(), expected);
}

#[test]
fn histogram_coded_stream_round_trips() {
    let learned = fixture_prior();
    let mut model = learned.model.clone();
    let hist = IndexHistogram::from_indices((1..=400u64).map(|i| 1 + (i * i) % 300));
    model.set_index_histogram(Some(hist));
    let codec = CodecSettings {
        use_histogram: true,
        ..CodecSettings::from_seed(9, 16.0)
    };
    let c = compress(&image(4), &descriptor(), &model, &fast_fine_tune(), &codec).unwrap();
    assert!(c.outcome.object.header.histogram);
    let back = CompressedObject::from_bytes(&c.outcome.object.to_bytes().unwrap()).unwrap();
    assert_eq!(decompress(&back, &model).unwrap(), c.outcome.reconstruction);
    assert!(decompress(&back, &learned.model).is_err());
}

#[test]
fn measure_conventions() {
    let learned = fixture_prior();
    let datum = image(5);
    let c = compress(
        &datum,
        &descriptor(),
        &learned.model,
        &fast_fine_tune(),
        &CodecSettings::from_seed(10, 16.0),
    )
    .unwrap();
    let obj = &c.outcome.object;
    let exact = measure(obj, datum.targets(), &datum).unwrap();
    assert_eq!(exact.mse, 0.0);
    assert_eq!(exact.psnr_db, f64::INFINITY);
    assert_eq!(psnr(1.0), 0.0);
    let m = measure(obj, &c.outcome.reconstruction, &datum).unwrap();
    assert_eq!(m.bits_total, 8 * obj.to_bytes().unwrap().len());
    assert_eq!(m.rate, m.bits_total as f64 / (SIDE * SIDE) as f64);
    assert!(measure(obj, &c.outcome.reconstruction[1..], &datum).is_err());

    let header_only = CompressedObject {
        header: StreamHeader {
            index_widths: vec![],
            ..obj.header.clone()
        },
        payload: BitString::new(),
    };
    let h = measure(&header_only, datum.targets(), &datum).unwrap();
    assert_eq!(h.payload_bits, 0);
    assert_eq!(
        h.rate,
        header_only.header_bits().unwrap() as f64 / (SIDE * SIDE) as f64
    );
}

#[test]
fn audio_rate_is_bits_per_second() {
    let d = SignalDescriptor::Audio {
        samples: 48_000,
        sample_rate: 16_000,
    };
    assert_eq!(d.rate_denominator(), 3.0);
}

#[test]
fn constant_signal_stays_within_budget() {
    let learned = fixture_prior();
    let datum = descriptor().batch(vec![0.6; SIDE * SIDE * 3]).unwrap();
    let codec = CodecSettings::from_seed(11, 16.0);
    let partition = learned
        .model
        .partition(16.0, codec.permutation_seed)
        .unwrap();
    let fit = fit_posterior(
        &datum,
        &learned.model,
        &partition,
        &quick_fine_tune(),
        codec.noise_seed,
    )
    .unwrap();
    let deltas = fit.block_kl_bits(learned.model.prior(), &partition);
    let ok = deltas.iter().filter(|&&d| d <= 17.0).count();
    assert!(ok * 10 >= deltas.len() * 9, "{deltas:?}");
}

#[test]
fn datum_off_the_grid_is_rejected() {
    let learned = fixture_prior();
    let wrong = SignalDescriptor::Image {
        height: SIDE,
        width: SIDE + 1,
        channels: 3,
    };
    let r = compress(
        &image(1),
        &wrong,
        &learned.model,
        &fast_fine_tune(),
        &CodecSettings::from_seed(1, 16.0),
    );
    assert!(matches!(r, Err(Error::InvalidConfig(_))));
    let grey = SignalDescriptor::Image {
        height: SIDE,
        width: SIDE,
        channels: 1,
    };
    let batch = grey.batch(vec![0.5; SIDE * SIDE]).unwrap();
    let r = compress(
        &batch,
        &grey,
        &learned.model,
        &fast_fine_tune(),
        &CodecSettings::from_seed(1, 16.0),
    );
    assert!(r.is_err());
}

#[test]
fn subsampled_fit_round_trips() {
    let learned = fixture_prior();
    let fine = FineTuneSettings {
        batch_fraction: 0.25,
        ..fast_fine_tune()
    };
    let c = compress(
        &image(3),
        &descriptor(),
        &learned.model,
        &fine,
        &CodecSettings::from_seed(12, 16.0),
    )
    .unwrap();
    let decoded = decompress(&c.outcome.object, &learned.model).unwrap();
    assert_eq!(decoded, c.outcome.reconstruction);
    assert!(c.outcome.block_kl_bits.iter().all(|&d| d <= 24.0));
    assert!(psnr(measure(&c.outcome.object, &decoded, &image(3)).unwrap().mse) > 10.0);
}

#[test]
fn rate_guard_pulls_a_runaway_block_back() {
    let learned = fixture_prior();
    let codec = CodecSettings::from_seed(12, 16.0);
    let fine = FineTuneSettings {
        batch_fraction: 0.25,
        ..fast_fine_tune()
    };
    let unguarded = FineTuneSettings {
        rate_guard_iterations: 0,
        ..fine.clone()
    };
    let r = compress(&image(3), &descriptor(), &learned.model, &unguarded, &codec);
    assert!(matches!(r, Err(Error::SampleCapExceeded { .. })), "{r:?}");
    let c = compress(&image(3), &descriptor(), &learned.model, &fine, &codec).unwrap();
    assert!(c.outcome.rate_guard_steps > 0);
    assert!(c.outcome.rate_guard_steps <= fine.rate_guard_iterations);
}
