//! Relative entropy coding: A* sampling over quasi-random proposals.

pub mod astar;
pub mod coding;
pub mod gumbel;
pub mod normal;
pub mod sobol;

pub use astar::{
    astar_decode, astar_encode, index_bits, sample_count, EncodedBlock, RecSettings,
    DEFAULT_SAMPLE_CAP,
};
pub use coding::{code_indices, decode_indices, BitReader, BitString, IndexHistogram};
pub use normal::inverse_normal_cdf;
pub use sobol::{ProposalSampler, SobolSequence};
