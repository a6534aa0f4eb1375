use super::CompressedObject;
use crate::error::{Error, Result};
use crate::io::SignalDescriptor;
use crate::model::SignalBatch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub bits_total: usize,
    pub payload_bits: usize,
    /// Bits per pixel for images, bits per second for audio.
    pub rate: f64,
    pub psnr_db: f64,
    pub mse: f64,
}

/// PSNR at unit peak; identical signals give `+∞`.
pub fn psnr(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn measure(
    obj: &CompressedObject,
    reconstruction: &[f64],
    original: &SignalBatch,
) -> Result<Metrics> {
    let reference = original.targets();
    if reconstruction.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: reconstruction.len(),
        });
    }
    let d: &SignalDescriptor = &obj.header.signal;
    if d.points() != original.len() || d.output_dim() != original.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.points(),
            got: original.len(),
        });
    }
    let mse = reconstruction
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len().max(1) as f64;
    let bits_total = obj.total_bits()?;
    Ok(Metrics {
        bits_total,
        payload_bits: obj.payload_bits(),
        rate: bits_total as f64 / d.rate_denominator(),
        psnr_db: psnr(mse),
        mse,
    })
}
