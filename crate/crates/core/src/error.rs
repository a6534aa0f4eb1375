use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variance must be positive and finite (index {index}, value {value})")]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("loss diverged (NaN) at {stage} step {step}")]
    Diverged { stage: &'static str, step: usize },

    #[error("non-finite importance weight at sample {0}")]
    NonFiniteImportanceWeight(u64),

    #[error("block {block}: {required_bits:.2} bits of KL+t needs more than the {cap} sample cap")]
    SampleCapExceeded {
        block: usize,
        required_bits: f64,
        cap: u64,
    },

    #[error("Sobol generator supports at most {max} dimensions, block needs {requested}")]
    SobolCapacity { max: usize, requested: usize },

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("prior mismatch: stream was encoded against a different prior model")]
    PriorMismatch,

    #[error("unsupported signal: {0}")]
    UnsupportedSignal(String),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
