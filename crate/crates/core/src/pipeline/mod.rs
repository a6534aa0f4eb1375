//! End-to-end compression of one signal against a learned prior.

mod bitstream;
mod encode;
mod fit;
mod metrics;

pub use bitstream::{CompressedObject, StreamHeader, FORMAT_VERSION};
pub use encode::{
    compress, decompress, exact_sample_reference, progressive_encode, CodecSettings, Compressed,
    EncodeOutcome, Timings,
};
pub use fit::{adjust_lambdas, fit_posterior, FineTuneSettings, PosteriorFit};
pub use metrics::{measure, psnr, Metrics};
