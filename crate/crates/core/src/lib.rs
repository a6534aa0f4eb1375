//! Lossy compression of images and audio by coding a sample from a
//! variational posterior over the weights of a small implicit neural
//! representation, against a prior learned from training data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod model;
pub mod optim;
pub mod partition;
pub mod pipeline;
pub mod prior;
pub mod rec;
pub mod seed;
pub mod variational;

pub use error::{Error, Result};
pub use io::{load_signal, save_signal, SignalDescriptor, SignalKind};
pub use model::{FlatWeights, Inr, InrConfig, SignalBatch};
pub use partition::BlockPartition;
pub use pipeline::{
    compress, decompress, measure, CodecSettings, Compressed, CompressedObject, FineTuneSettings,
    Metrics,
};
pub use prior::{learn_prior, LearnedPrior, PriorModel, TrainingSchedule};
pub use rec::{EncodedBlock, RecSettings};
pub use variational::DiagonalGaussian;
