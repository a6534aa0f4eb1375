//! Compressed file layout, all integers little-endian:
//!
//! | field | bytes |
//! |---|---|
//! | magic `CMB1` | 4 |
//! | format version (u16) | 2 |
//! | network config | 36 |
//! | prior content hash | 32 |
//! | signal descriptor | 13 |
//! | proposal seed (u64) | 8 |
//! | `t` in bits (f64) | 8 |
//! | `kappa` in bits (f64) | 8 |
//! | permutation seed (u64) | 8 |
//! | sample cap (u64) | 8 |
//! | proposal generator version (u16) | 2 |
//! | flags (u8, bit 0 = histogram index coding) | 1 |
//! | block count K (u32) | 4 |
//! | width table bit length (u32), then its bytes | 4 + ⌈w/8⌉ |
//! | payload bit length (u64), then its bytes | 8 + ⌈p/8⌉ |
//! | CRC32 of everything above | 4 |
//!
//! The width table holds each block's fixed-length index width: a single
//! `1` bit when it equals `⌈kappa + t⌉`, otherwise `0` and five explicit bits.

use crate::error::{Error, Result};
use crate::io::SignalDescriptor;
use crate::model::InrConfig;
use crate::rec::BitString;

pub const FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"CMB1";
const WIDTH_BITS: u32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub config: InrConfig,
    pub prior_hash: [u8; 32],
    pub signal: SignalDescriptor,
    pub rec_seed: u64,
    pub t_bits: f64,
    pub kappa_bits: f64,
    pub permutation_seed: u64,
    pub sample_cap: u64,
    pub generator_version: u16,
    pub histogram: bool,
    /// `⌈log₂ N_k⌉` per block.
    pub index_widths: Vec<u32>,
}

impl StreamHeader {
    pub fn block_count(&self) -> usize {
        self.index_widths.len()
    }

    fn default_width(&self) -> u32 {
        (self.kappa_bits + self.t_bits).max(0.0).ceil() as u32
    }

    fn width_table(&self) -> Result<BitString> {
        let default = self.default_width();
        let mut bits = BitString::new();
        for &w in &self.index_widths {
            if w >= 1 << WIDTH_BITS {
                return Err(Error::InvalidConfig(format!(
                    "index width {w} does not fit the header"
                )));
            }
            if w == default {
                bits.push_bit(true);
            } else {
                bits.push_bit(false);
                bits.push_bits(w as u64, WIDTH_BITS);
            }
        }
        Ok(bits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedObject {
    pub header: StreamHeader,
    pub payload: BitString,
}

impl CompressedObject {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let h = &self.header;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        h.config.write_to(&mut out)?;
        out.extend_from_slice(&h.prior_hash);
        h.signal.write_to(&mut out)?;
        out.extend_from_slice(&h.rec_seed.to_le_bytes());
        out.extend_from_slice(&h.t_bits.to_le_bytes());
        out.extend_from_slice(&h.kappa_bits.to_le_bytes());
        out.extend_from_slice(&h.permutation_seed.to_le_bytes());
        out.extend_from_slice(&h.sample_cap.to_le_bytes());
        out.extend_from_slice(&h.generator_version.to_le_bytes());
        out.push(h.histogram as u8);
        out.extend_from_slice(&(h.block_count() as u32).to_le_bytes());
        let table = h.width_table()?;
        out.extend_from_slice(&(table.len() as u32).to_le_bytes());
        out.extend_from_slice(table.as_bytes());
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(self.payload.as_bytes());
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 6 || &bytes[..4] != MAGIC {
            return Err(Error::CorruptStream("not a compressed stream".into()));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
            return Err(Error::CorruptStream("CRC mismatch".into()));
        }
        let mut r = &body[4..];
        let version = u16::from_le_bytes(take(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(Error::CorruptStream(format!(
                "unsupported stream version {version}"
            )));
        }
        let config = InrConfig::read_from(&mut r)?;
        let prior_hash: [u8; 32] = take(&mut r)?;
        let signal = SignalDescriptor::read_from(&mut r)?;
        let rec_seed = u64::from_le_bytes(take(&mut r)?);
        let t_bits = f64::from_le_bytes(take(&mut r)?);
        let kappa_bits = f64::from_le_bytes(take(&mut r)?);
        let permutation_seed = u64::from_le_bytes(take(&mut r)?);
        let sample_cap = u64::from_le_bytes(take(&mut r)?);
        let generator_version = u16::from_le_bytes(take(&mut r)?);
        let [flags] = take::<1>(&mut r)?;
        if flags > 1 {
            return Err(Error::CorruptStream(format!("unknown flags {flags:#x}")));
        }
        let k = u32::from_le_bytes(take(&mut r)?) as usize;
        let table_bits = u32::from_le_bytes(take(&mut r)?) as usize;
        let table = BitString::from_bytes(take_vec(&mut r, table_bits.div_ceil(8))?, table_bits)?;
        let payload_bits = u64::from_le_bytes(take(&mut r)?) as usize;
        let payload =
            BitString::from_bytes(take_vec(&mut r, payload_bits.div_ceil(8))?, payload_bits)?;
        if !r.is_empty() {
            return Err(Error::CorruptStream("trailing bytes".into()));
        }
        if !(t_bits >= 0.0 && t_bits.is_finite()) || !(kappa_bits > 0.0 && kappa_bits.is_finite()) {
            return Err(Error::CorruptStream("invalid t or kappa".into()));
        }
        let mut header = StreamHeader {
            config,
            prior_hash,
            signal,
            rec_seed,
            t_bits,
            kappa_bits,
            permutation_seed,
            sample_cap,
            generator_version,
            histogram: flags == 1,
            index_widths: Vec::with_capacity(k.min(1 << 20)),
        };
        let default = header.default_width();
        let mut tr = table.reader();
        for _ in 0..k {
            let w = if tr.read_bit()? {
                default
            } else {
                tr.read_bits(WIDTH_BITS)? as u32
            };
            header.index_widths.push(w);
        }
        if tr.remaining() != 0 {
            return Err(Error::CorruptStream("width table length mismatch".into()));
        }
        Ok(Self { header, payload })
    }

    /// Serialized size in bits (header, payload, padding and checksum).
    pub fn total_bits(&self) -> Result<usize> {
        Ok(8 * self.to_bytes()?.len())
    }

    pub fn payload_bits(&self) -> usize {
        self.payload.len()
    }

    pub fn header_bits(&self) -> Result<usize> {
        Ok(self.total_bits()? - self.payload_bits())
    }
}

fn take<const N: usize>(r: &mut &[u8]) -> Result<[u8; N]> {
    if r.len() < N {
        return Err(Error::CorruptStream("stream truncated".into()));
    }
    let (head, rest) = r.split_at(N);
    *r = rest;
    Ok(head.try_into().unwrap())
}

fn take_vec(r: &mut &[u8], n: usize) -> Result<Vec<u8>> {
    if r.len() < n {
        return Err(Error::CorruptStream("stream truncated".into()));
    }
    let (head, rest) = r.split_at(n);
    *r = rest;
    Ok(head.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(widths: Vec<u32>, histogram: bool) -> StreamHeader {
        StreamHeader {
            config: InrConfig::cifar(),
            prior_hash: [7; 32],
            signal: SignalDescriptor::Image {
                height: 32,
                width: 32,
                channels: 3,
            },
            rec_seed: 99,
            t_bits: 0.0,
            kappa_bits: 16.0,
            permutation_seed: 5,
            sample_cap: 1 << 24,
            generator_version: 1,
            histogram,
            index_widths: widths,
        }
    }

    #[test]
    fn default_widths_cost_one_bit_each() {
        let obj = CompressedObject {
            header: header(vec![16; 10], false),
            payload: BitString::new(),
        };
        let other = CompressedObject {
            header: header(vec![15; 10], false),
            payload: BitString::new(),
        };
        let a = obj.to_bytes().unwrap();
        let b = other.to_bytes().unwrap();
        assert_eq!(
            b.len() - a.len(),
            (60usize.div_ceil(8)) - (10usize.div_ceil(8))
        );
        assert_eq!(CompressedObject::from_bytes(&a).unwrap(), obj);
        assert_eq!(CompressedObject::from_bytes(&b).unwrap(), other);
    }

    #[test]
    fn corruption_is_detected() {
        let mut payload = BitString::new();
        payload.push_bits(0xABCD, 16);
        let obj = CompressedObject {
            header: header(vec![16], false),
            payload,
        };
        let bytes = obj.to_bytes().unwrap();
        for i in [0, 5, 40, bytes.len() - 7, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[i] ^= 0x10;
            assert!(CompressedObject::from_bytes(&bad).is_err(), "byte {i}");
        }
        assert!(CompressedObject::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn header_accounting() {
        let mut payload = BitString::new();
        payload.push_bits(3, 19);
        let obj = CompressedObject {
            header: header(vec![19], false),
            payload,
        };
        let total = obj.total_bits().unwrap();
        assert_eq!(total, 8 * obj.to_bytes().unwrap().len());
        assert_eq!(obj.header_bits().unwrap() + 19, total);
    }

    proptest! {
        #[test]
        fn random_objects_round_trip(
            widths in proptest::collection::vec(0u32..25, 1..80),
            payload_bits in proptest::collection::vec(any::<bool>(), 0..300),
            seeds in any::<(u64, u64)>(),
            t in 0.0f64..8.0,
            kappa in 1.0f64..24.0,
            hist in any::<bool>(),
        ) {
            let mut h = header(widths, hist);
            h.rec_seed = seeds.0;
            h.permutation_seed = seeds.1;
            h.t_bits = t;
            h.kappa_bits = kappa;
            let mut payload = BitString::new();
            payload_bits.iter().for_each(|&b| payload.push_bit(b));
            let obj = CompressedObject { header: h, payload };
            let bytes = obj.to_bytes().unwrap();
            let back = CompressedObject::from_bytes(&bytes).unwrap();
            prop_assert_eq!(&back, &obj);
            prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        }
    }
}
