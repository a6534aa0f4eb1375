#![allow(dead_code)]

use std::sync::OnceLock;

use bayesinr_core::io::SignalDescriptor;
use bayesinr_core::model::{InrConfig, SignalBatch};
use bayesinr_core::pipeline::FineTuneSettings;
use bayesinr_core::prior::{learn_prior, LearnedPrior, TrainingSchedule};

pub const SIDE: usize = 8;

pub fn descriptor() -> SignalDescriptor {
    SignalDescriptor::Image {
        height: SIDE,
        width: SIDE,
        channels: 3,
    }
}

/// Smooth synthetic RGB image; `m` selects the pattern.
pub fn image(m: usize) -> SignalBatch {
    let d = descriptor();
    let grid = d.coordinate_grid();
    let f = 0.7 + 0.35 * m as f64;
    let phase = 0.9 * m as f64;
    let mut values = Vec::with_capacity(SIDE * SIDE * 3);
    for xy in grid.chunks_exact(2) {
        let (y, x) = (xy[0], xy[1]);
        values.push(0.5 + 0.3 * (f * x + phase).sin() * (0.8 * y).cos());
        values.push(0.5 + 0.25 * (f * (x + y) - phase).cos());
        values.push(0.45 + 0.2 * x * y + 0.1 * (2.0 * f * y).sin());
    }
    d.batch(values).unwrap()
}

/// Two dense layers over an 8-wide embedding.
pub fn tiny_config() -> InrConfig {
    let mut c = InrConfig::new(2, 3, 2, 12, 8);
    c.frequency_scale = 1.0;
    c
}

pub fn quick_schedule() -> TrainingSchedule {
    TrainingSchedule {
        epochs: 6,
        iters_per_epoch: 150,
        first_epoch_iters: 400,
        learning_rate: 5e-3,
        posterior_var_init: 1e-6,
        frozen_noise: false,
        early_stop_tol: None,
    }
}

pub const BETA: f64 = 1e-3;

/// Prior learned once per test binary from four training images.
pub fn fixture_prior() -> &'static LearnedPrior {
    static P: OnceLock<LearnedPrior> = OnceLock::new();
    P.get_or_init(|| fixture_prior_with(BETA))
}

pub fn fixture_prior_with(beta: f64) -> LearnedPrior {
    let data: Vec<SignalBatch> = (0..4).map(image).collect();
    learn_prior(&data, &tiny_config(), beta, &quick_schedule(), 17).unwrap()
}

pub fn quick_fine_tune() -> FineTuneSettings {
    FineTuneSettings {
        fit_iterations: 10000,
        posterior_var_init: 1e-6,
        ..FineTuneSettings::default()
    }
}
