//! Serialising A* indices.
//!
//! Fixed-length mode writes `index - 1` in `⌈log₂ N⌉` bits per block, where
//! the decoder learns each block's width from the stream header. Histogram
//! mode range-codes the bit length of `index - 1` under an add-one smoothed
//! empirical table and appends the remaining low bits uniformly.

use std::io::{Read, Write};

use constriction::stream::model::{DefaultContiguousCategoricalEntropyModel, DefaultUniformModel};
use constriction::stream::queue::{DefaultRangeDecoder, DefaultRangeEncoder};
use constriction::stream::{Decode, Encode};

use super::astar::EncodedBlock;
use crate::error::{Error, Result};

/// MSB-first bit buffer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if len > bytes.len() * 8 || bytes.len() > len.div_ceil(8) {
            return Err(Error::CorruptStream(format!(
                "{len} bits in {} bytes",
                bytes.len()
            )));
        }
        Ok(Self { bytes, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Backing bytes; the final byte is zero-padded.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Append the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        for k in (0..width).rev() {
            self.push_bit((value >> k) & 1 == 1);
        }
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader { bits: self, pos: 0 }
    }
}

pub struct BitReader<'a> {
    bits: &'a BitString,
    pos: usize,
}

impl BitReader<'_> {
    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.bits.len {
            return Err(Error::CorruptStream("payload truncated".into()));
        }
        let b = self.bits.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(b)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn remaining(&self) -> usize {
        self.bits.len - self.pos
    }
}

/// Number of bit-length buckets: `index - 1 < 2^32`.
pub const HISTOGRAM_BUCKETS: usize = 33;

/// Empirical frequencies of A* indices, bucketed by the bit length of `index - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexHistogram {
    counts: Vec<u64>,
}

impl Default for IndexHistogram {
    fn default() -> Self {
        Self {
            counts: vec![0; HISTOGRAM_BUCKETS],
        }
    }
}

impl IndexHistogram {
    pub fn from_indices<I: IntoIterator<Item = u64>>(indices: I) -> Self {
        let mut h = Self::default();
        for i in indices {
            h.record(i);
        }
        h
    }

    pub fn record(&mut self, index: u64) {
        self.counts[bucket(index)] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn probabilities(&self) -> Vec<f64> {
        let total = (self.total() + HISTOGRAM_BUCKETS as u64) as f64;
        self.counts
            .iter()
            .map(|&c| (c + 1) as f64 / total)
            .collect()
    }

    fn model(&self) -> Result<DefaultContiguousCategoricalEntropyModel> {
        DefaultContiguousCategoricalEntropyModel::from_floating_point_probabilities_perfect(
            &self.probabilities(),
        )
        .map_err(|_| Error::InvalidConfig("cannot build index model".into()))
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(&(self.counts.len() as u16).to_le_bytes())?;
        for c in &self.counts {
            out.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut n = [0u8; 2];
        input.read_exact(&mut n)?;
        if u16::from_le_bytes(n) as usize != HISTOGRAM_BUCKETS {
            return Err(Error::CorruptStream("index histogram size".into()));
        }
        let mut counts = vec![0u64; HISTOGRAM_BUCKETS];
        let mut buf = [0u8; 8];
        for c in counts.iter_mut() {
            input.read_exact(&mut buf)?;
            *c = u64::from_le_bytes(buf);
        }
        Ok(Self { counts })
    }
}

/// Bit length of `index - 1` (0 for index 1).
fn bucket(index: u64) -> usize {
    let v = index.saturating_sub(1);
    (64 - v.leading_zeros()) as usize
}

/// Encode the indices of `blocks` in order. `widths[k]` is block k's
/// fixed-length width (`⌈log₂ N_k⌉`).
pub fn code_indices(
    blocks: &[EncodedBlock],
    histogram: Option<&IndexHistogram>,
) -> Result<BitString> {
    for b in blocks {
        if b.index == 0 || b.index > b.n_samples {
            return Err(Error::CorruptStream(format!(
                "block {}: index {} outside 1..={}",
                b.block_id, b.index, b.n_samples
            )));
        }
    }
    match histogram {
        None => {
            let mut bits = BitString::new();
            for b in blocks {
                bits.push_bits(b.index - 1, super::astar::index_bits(b.n_samples));
            }
            Ok(bits)
        }
        Some(h) => {
            let model = h.model()?;
            let mut enc = DefaultRangeEncoder::new();
            for b in blocks {
                let v = b.index - 1;
                let k = bucket(b.index);
                enc.encode_symbol(k, &model)
                    .map_err(|e| Error::CorruptStream(format!("range coder: {e:?}")))?;
                if k >= 2 {
                    let low = v & ((1u64 << (k - 1)) - 1);
                    encode_uniform(&mut enc, low, (k - 1) as u32)?;
                }
            }
            let words = enc
                .into_compressed()
                .map_err(|e| Error::CorruptStream(format!("range coder: {e:?}")))?;
            let mut bits = BitString::new();
            for w in words {
                bits.push_bits(w as u64, 32);
            }
            Ok(bits)
        }
    }
}

const UNIFORM_CHUNK: u32 = 16;

fn encode_uniform(enc: &mut DefaultRangeEncoder, value: u64, width: u32) -> Result<()> {
    let mut remaining = width;
    while remaining > 0 {
        let take = remaining.min(UNIFORM_CHUNK);
        remaining -= take;
        let part = (value >> remaining) & ((1u64 << take) - 1);
        enc.encode_symbol(part as usize, DefaultUniformModel::new(1usize << take))
            .map_err(|e| Error::CorruptStream(format!("range coder: {e:?}")))?;
    }
    Ok(())
}

fn decode_uniform(dec: &mut DefaultRangeDecoder, width: u32) -> Result<u64> {
    let mut remaining = width;
    let mut value = 0u64;
    while remaining > 0 {
        let take = remaining.min(UNIFORM_CHUNK);
        remaining -= take;
        let part = dec
            .decode_symbol(DefaultUniformModel::new(1usize << take))
            .map_err(|e| Error::CorruptStream(format!("range coder: {e:?}")))?;
        value = (value << take) | part as u64;
    }
    Ok(value)
}

/// Inverse of [`code_indices`]. Each decoded block's `n_samples` is the
/// power-of-two bound `2^{widths[k]}` implied by its width.
pub fn decode_indices(
    bits: &BitString,
    widths: &[u32],
    histogram: Option<&IndexHistogram>,
) -> Result<Vec<EncodedBlock>> {
    let bound = |w: u32| if w >= 64 { u64::MAX } else { 1u64 << w };
    match histogram {
        None => {
            let expected: usize = widths.iter().map(|&w| w as usize).sum();
            if bits.len() != expected {
                return Err(Error::CorruptStream(format!(
                    "payload has {} bits, header implies {expected}",
                    bits.len()
                )));
            }
            let mut r = bits.reader();
            widths
                .iter()
                .enumerate()
                .map(|(k, &w)| {
                    Ok(EncodedBlock {
                        index: r.read_bits(w)? + 1,
                        n_samples: bound(w),
                        block_id: k,
                    })
                })
                .collect()
        }
        Some(h) => {
            if !bits.len().is_multiple_of(32) {
                return Err(Error::CorruptStream(
                    "range-coded payload is not word aligned".into(),
                ));
            }
            let mut r = bits.reader();
            let mut words = Vec::with_capacity(bits.len() / 32);
            while r.remaining() > 0 {
                words.push(r.read_bits(32)? as u32);
            }
            let model = h.model()?;
            let mut dec = DefaultRangeDecoder::from_compressed(words)
                .map_err(|e| Error::CorruptStream(format!("range coder: {e:?}")))?;
            let mut out = Vec::with_capacity(widths.len());
            for (k, &w) in widths.iter().enumerate() {
                let b = dec
                    .decode_symbol(&model)
                    .map_err(|e| Error::CorruptStream(format!("range coder: {e:?}")))?;
                if b > w as usize {
                    return Err(Error::CorruptStream(format!(
                        "block {k}: index exceeds its width"
                    )));
                }
                let v = match b {
                    0 => 0,
                    1 => 1,
                    _ => (1u64 << (b - 1)) | decode_uniform(&mut dec, (b - 1) as u32)?,
                };
                out.push(EncodedBlock {
                    index: v + 1,
                    n_samples: bound(w),
                    block_id: k,
                });
            }
            Ok(out)
        }
    }
}
