//! Digitally shifted Sobol points mapped to Gaussian proposals.
//!
//! Direction numbers are Joe and Kuo's `new-joe-kuo-6.21201` set at 32-bit
//! resolution. Point `i` of a sequence depends only on `(seed, dim, i)`, so
//! the decoder can jump straight to the transmitted index.

use std::sync::OnceLock;

use sobol::params::JoeKuoD6;
use sobol::Sobol;

use super::normal::inverse_normal_cdf;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, SplitMix64};
use crate::variational::DiagonalGaussian;

/// Largest supported block dimension.
pub const MAX_DIMENSION: usize = 21201;
const BITS: usize = 32;

/// Bumped whenever the generator or the uniform-to-normal mapping changes.
pub const GENERATOR_VERSION: u16 = 1;

fn directions() -> &'static [[u32; BITS]] {
    static TABLE: OnceLock<Vec<[u32; BITS]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let params = JoeKuoD6::extended();
        Sobol::<u32>::init_direction_vals::<u32>(MAX_DIMENSION, BITS, &params)
            .into_iter()
            .map(|v| {
                let mut row = [0u32; BITS];
                row.copy_from_slice(&v);
                row
            })
            .collect()
    })
}

/// A `dim`-dimensional Sobol sequence with an optional XOR digital shift.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    dirs: &'static [[u32; BITS]],
    shift: Vec<u32>,
}

impl SobolSequence {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let shift = (0..dim).map(|_| (rng.next_u64() >> 32) as u32).collect();
        Self::with_shift(dim, shift)
    }

    /// The plain sequence, without scrambling.
    pub fn unshifted(dim: usize) -> Result<Self> {
        Self::with_shift(dim, vec![0; dim])
    }

    fn with_shift(dim: usize, shift: Vec<u32>) -> Result<Self> {
        if dim > MAX_DIMENSION {
            return Err(Error::SobolCapacity {
                max: MAX_DIMENSION,
                requested: dim,
            });
        }
        Ok(Self {
            dirs: &directions()[..dim],
            shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Integer coordinates of point `index` (gray-code ordering, point 0 is the origin).
    pub fn point_bits(&self, index: u64) -> Vec<u32> {
        let gray = index ^ (index >> 1);
        self.dirs
            .iter()
            .zip(&self.shift)
            .map(|(v, s)| {
                let mut x = *s;
                let mut g = gray;
                let mut k = 0;
                while g != 0 {
                    if g & 1 == 1 {
                        x ^= v[k];
                    }
                    g >>= 1;
                    k += 1;
                }
                x
            })
            .collect()
    }

    /// Iterate points `start, start + 1, ...` incrementally.
    pub fn iter_from(&self, start: u64) -> SobolIter<'_> {
        SobolIter {
            seq: self,
            index: start,
            state: self.point_bits(start),
        }
    }
}

pub struct SobolIter<'a> {
    seq: &'a SobolSequence,
    index: u64,
    state: Vec<u32>,
}

impl SobolIter<'_> {
    /// Current point; call [`advance`](Self::advance) to move on.
    pub fn current(&self) -> &[u32] {
        &self.state
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn advance(&mut self) {
        self.index += 1;
        let c = self.index.trailing_zeros() as usize;
        for (x, v) in self.state.iter_mut().zip(self.seq.dirs) {
            *x ^= v[c];
        }
    }
}

/// Map a 32-bit coordinate to `(0, 1)`; zero goes to half a grid step.
#[inline]
pub fn to_unit(x: u32) -> f64 {
    if x == 0 {
        0.5 / 4_294_967_296.0
    } else {
        x as f64 / 4_294_967_296.0
    }
}

/// Standard-normal variates for one Sobol point.
#[inline]
pub fn to_standard_normal(bits: &[u32], out: &mut [f64]) {
    for (z, &x) in out.iter_mut().zip(bits) {
        *z = inverse_normal_cdf(to_unit(x));
    }
}

/// Seeded bijection of the 32-bit index space: a four-round Feistel network
/// over 16-bit halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexPermutation {
    keys: [u32; 4],
}

impl IndexPermutation {
    pub fn new(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut keys = [0u32; 4];
        for k in &mut keys {
            *k = (rng.next_u64() >> 32) as u32;
        }
        Self { keys }
    }

    fn round(key: u32, half: u32) -> u32 {
        let mut x = (key as u64) << 32 | half as u64;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((x ^ (x >> 31)) & 0xffff) as u32
    }

    pub fn apply(&self, index: u32) -> u32 {
        let (mut l, mut r) = (index >> 16, index & 0xffff);
        for &k in &self.keys {
            (l, r) = (r, l ^ Self::round(k, r));
        }
        l << 16 | r
    }

    pub fn invert(&self, index: u32) -> u32 {
        let (mut l, mut r) = (index >> 16, index & 0xffff);
        for &k in self.keys.iter().rev() {
            (l, r) = (r ^ Self::round(k, l), l);
        }
        l << 16 | r
    }
}

/// Largest usable 1-based proposal index.
pub const MAX_PROPOSALS: u64 = u32::MAX as u64;

/// Proposal sample `i` (1-based) from `prior`: a point of the shifted Sobol
/// net, visited in a seeded pseudo-random order, pushed through the Gaussian
/// inverse CDF.
#[derive(Debug, Clone)]
pub struct ProposalSampler {
    seq: SobolSequence,
    order: Option<IndexPermutation>,
}

impl ProposalSampler {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            seq: SobolSequence::new(dim, seed)?,
            order: Some(IndexPermutation::new(derive_seed(seed, "order", 0))),
        })
    }

    /// Points in plain sequence order: sample `i` is Sobol point `i`.
    pub fn from_sequence(seq: SobolSequence) -> Self {
        Self { seq, order: None }
    }

    pub fn sequence(&self) -> &SobolSequence {
        &self.seq
    }

    pub fn dim(&self) -> usize {
        self.seq.dim()
    }

    /// Sobol point index of 1-based sample `i`.
    pub fn point_index(&self, i: u64) -> u64 {
        assert!(
            (1..=MAX_PROPOSALS).contains(&i),
            "proposal index {i} out of range"
        );
        match self.order {
            Some(p) => p.apply(i as u32) as u64,
            None => i,
        }
    }

    /// Write the standard-normal draw for 1-based sample `i` into `out`.
    pub fn standard_normal_into(&self, i: u64, out: &mut [f64]) {
        to_standard_normal(&self.seq.point_bits(self.point_index(i)), out);
    }

    pub fn standard_normal(&self, i: u64) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        self.standard_normal_into(i, &mut z);
        z
    }

    /// Sample `i` (1-based) mapped onto `prior`.
    pub fn sample(&self, prior: &DiagonalGaussian, i: u64) -> Vec<f64> {
        scale_to(prior, &self.standard_normal(i))
    }
}

pub(crate) fn scale_to(prior: &DiagonalGaussian, z: &[f64]) -> Vec<f64> {
    prior
        .mean()
        .iter()
        .zip(prior.variance())
        .zip(z)
        .map(|((m, v), z)| m + v.sqrt() * z)
        .collect()
}

/// The first `n` proposal samples for `prior`.
pub fn proposal_samples(prior: &DiagonalGaussian, n: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "need at least one proposal sample".into(),
        ));
    }
    if n > MAX_PROPOSALS {
        return Err(Error::InvalidConfig(format!(
            "at most {MAX_PROPOSALS} proposal samples"
        )));
    }
    let sampler = ProposalSampler::new(prior.dim(), seed)?;
    Ok((1..=n).map(|i| sampler.sample(prior, i)).collect())
}
