use bayesinr_core::io::{
    axis, kind_of, load_signal, pcm_to_unit, save_signal, unit_to_byte, unit_to_pcm,
    SignalDescriptor, SignalKind,
};

fn ramp(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i % 256) as f64 / 255.0).collect()
}

#[test]
fn two_by_two_grid() {
    let d = SignalDescriptor::Image {
        height: 2,
        width: 2,
        channels: 3,
    };
    assert_eq!(
        d.coordinate_grid(),
        vec![-1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0]
    );
    assert_eq!(axis(1), vec![0.0]);
    assert_eq!(axis(3), vec![-1.0, 0.0, 1.0]);
}

#[test]
fn png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for channels in [1, 3] {
        let d = SignalDescriptor::Image {
            height: 5,
            width: 7,
            channels,
        };
        let values = ramp(35 * channels);
        let path = dir.path().join(format!("x{channels}.png"));
        save_signal(&values, &d, &path).unwrap();
        let (batch, back) = load_signal(&path, SignalKind::Image).unwrap();
        assert_eq!(back, d);
        assert_eq!(batch.targets(), values.as_slice());
        assert_eq!(batch.coords(), d.coordinate_grid().as_slice());
    }
}

#[test]
fn pnm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (channels, ext) in [(3, "ppm"), (1, "pgm")] {
        let d = SignalDescriptor::Image {
            height: 4,
            width: 6,
            channels,
        };
        let values = ramp(24 * channels);
        let path = dir.path().join(format!("x.{ext}"));
        save_signal(&values, &d, &path).unwrap();
        let (batch, back) = load_signal(&path, SignalKind::Image).unwrap();
        assert_eq!(back, d);
        assert_eq!(batch.targets(), values.as_slice());
    }
}

#[test]
fn pnm_header_comments_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ppm");
    let mut bytes = b"P6\n# made by hand\n2 1\n255\n".to_vec();
    bytes.extend_from_slice(&[0, 128, 255, 10, 20, 30]);
    std::fs::write(&path, bytes).unwrap();
    let (batch, d) = load_signal(&path, SignalKind::Image).unwrap();
    assert_eq!(
        d,
        SignalDescriptor::Image {
            height: 1,
            width: 2,
            channels: 3
        }
    );
    assert_eq!(batch.targets()[2], 1.0);
    assert_eq!(batch.targets()[3], 10.0 / 255.0);
}

#[test]
fn unsupported_inputs_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deep.ppm");
    std::fs::write(&path, b"P6\n1 1\n65535\n\0\0\0\0\0\0").unwrap();
    assert!(load_signal(&path, SignalKind::Image).is_err());
    assert!(kind_of(std::path::Path::new("a.jpg")).is_err());
    assert_eq!(
        kind_of(std::path::Path::new("a.WAV")).unwrap(),
        SignalKind::Audio
    );
    assert!(load_signal(&dir.path().join("missing.png"), SignalKind::Image).is_err());
}

#[test]
fn wav_round_trip_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = SignalDescriptor::Audio {
        samples: 48_000,
        sample_rate: 16_000,
    };
    let values: Vec<f64> = (0..48_000)
        .map(|i| pcm_to_unit((((i * 37) % 65536) - 32768) as i16))
        .collect();
    let path = dir.path().join("a.wav");
    save_signal(&values, &d, &path).unwrap();
    let (batch, back) = load_signal(&path, SignalKind::Audio).unwrap();
    assert_eq!(back, d);
    assert_eq!(batch.len(), 48_000);
    assert_eq!(batch.input_dim(), 1);
    assert_eq!(batch.targets(), values.as_slice());
}

#[test]
fn stereo_wav_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.wav");
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: 8000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&path, spec).unwrap();
    w.write_sample(0i16).unwrap();
    w.write_sample(0i16).unwrap();
    w.finalize().unwrap();
    assert!(load_signal(&path, SignalKind::Audio).is_err());
}

#[test]
fn value_maps() {
    assert_eq!(unit_to_byte(1.7), 255);
    assert_eq!(unit_to_byte(-0.2), 0);
    for s in [i16::MIN, -1, 0, 1, 12345, i16::MAX] {
        assert_eq!(unit_to_pcm(pcm_to_unit(s)), s);
    }
    assert_eq!(pcm_to_unit(0), 0.5);
}

#[test]
fn wrong_length_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = SignalDescriptor::Image {
        height: 2,
        width: 2,
        channels: 3,
    };
    assert!(save_signal(&[0.0; 11], &d, &dir.path().join("x.png")).is_err());
}
