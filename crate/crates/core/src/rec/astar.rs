//! Global-bound, depth-limited A* coding of one weight block.
//!
//! The encoder simulates `N = ⌊2^{KL + t}⌋` proposals from the prior,
//! perturbs their log importance weights with a strictly decreasing chain of
//! truncated Gumbels and transmits the index of the largest perturbed
//! weight. The decoder regenerates that one proposal from the shared seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gumbel::truncated_gumbel;
use super::sobol::{ProposalSampler, MAX_PROPOSALS};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::variational::{kl_divergence, nats_to_bits, DiagonalGaussian};

/// Default hard limit on samples per block.
pub const DEFAULT_SAMPLE_CAP: u64 = 1 << 24;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct RecSettings {
    /// Oversampling exponent `t` in bits.
    pub t_bits: f64,
    pub max_samples_cap: u64,
    /// Shared proposal seed.
    pub seed: u64,
}

impl Default for RecSettings {
    fn default() -> Self {
        Self {
            t_bits: 0.0,
            max_samples_cap: DEFAULT_SAMPLE_CAP,
            seed: 0,
        }
    }
}

impl RecSettings {
    /// Proposal seed of one block.
    pub fn block_seed(&self, block_id: usize) -> u64 {
        derive_seed(self.seed, "proposal", block_id as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodedBlock {
    /// 1-based index of the selected proposal.
    pub index: u64,
    /// Number of proposals the encoder searched (an upper bound on `index`).
    pub n_samples: u64,
    pub block_id: usize,
}

/// `⌊2^{kl_bits + t}⌋`, at least one; errors when the cap would be exceeded.
pub fn sample_count(kl_bits: f64, t_bits: f64, cap: u64, block: usize) -> Result<u64> {
    let exponent = kl_bits.max(0.0) + t_bits;
    if !exponent.is_finite()
        || exponent >= 64.0
        || exponent.exp2().floor() > cap.min(MAX_PROPOSALS) as f64
    {
        return Err(Error::SampleCapExceeded {
            block,
            required_bits: exponent,
            cap,
        });
    }
    Ok((exponent.exp2().floor() as u64).max(1))
}

/// Bits of a fixed-length code for an index in `1..=n`.
pub fn index_bits(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Outcome of a perturbed-argmax search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub index: u64,
    pub score: f64,
}

/// Argmax over `i ∈ 1..=n` of `G_i + log_ratio(i)` with `G_i ~ TruncGumbel(G_{i-1})`,
/// `G_0 = +∞`. Ties go to the smaller index.
///
/// Gumbels are drawn sequentially in chunks; importance weights within a
/// chunk are evaluated in parallel. The result does not depend on the
/// thread count.
pub fn perturbed_argmax<F>(n: u64, rng: &mut ChaCha8Rng, log_ratio: F) -> Result<SearchResult>
where
    F: Fn(u64, u64) -> Vec<f64> + Sync,
{
    let mut best = SearchResult {
        index: 0,
        score: f64::NEG_INFINITY,
    };
    let mut bound = f64::INFINITY;
    let mut start = 1u64;
    while start <= n {
        let end = (start + CHUNK - 1).min(n);
        let gumbels: Vec<f64> = (start..=end)
            .map(|_| {
                let g = truncated_gumbel(bound, rng);
                debug_assert!(g <= bound);
                bound = g;
                g
            })
            .collect();
        // Sub-chunks keep each parallel task's incremental state cheap to seed.
        let sub = 1024u64;
        let pieces: Vec<(u64, u64)> = (start..=end)
            .step_by(sub as usize)
            .map(|s| (s, (s + sub - 1).min(end)))
            .collect();
        let ratios: Vec<Vec<f64>> = pieces.par_iter().map(|&(s, e)| log_ratio(s, e)).collect();
        for (i, r) in (start..=end).zip(ratios.into_iter().flatten()) {
            if !r.is_finite() {
                return Err(Error::NonFiniteImportanceWeight(i));
            }
            let score = gumbels[(i - start) as usize] + r;
            if score > best.score {
                best = SearchResult { index: i, score };
            }
        }
        start = end + 1;
    }
    Ok(best)
}

/// Log importance weight `log q(w) - log p(w)` of `w = μ_p + σ_p z`.
struct LogRatio {
    prior_mean: Vec<f64>,
    prior_sd: Vec<f64>,
    target_mean: Vec<f64>,
    target_var: Vec<f64>,
    constant: f64,
}

impl LogRatio {
    fn new(target: &DiagonalGaussian, prior: &DiagonalGaussian) -> Self {
        let constant = target
            .variance()
            .iter()
            .zip(prior.variance())
            .map(|(vq, vp)| -0.5 * (vq / vp).ln())
            .sum();
        Self {
            prior_mean: prior.mean().to_vec(),
            prior_sd: prior.variance().iter().map(|v| v.sqrt()).collect(),
            target_mean: target.mean().to_vec(),
            target_var: target.variance().to_vec(),
            constant,
        }
    }

    fn eval(&self, z: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (d, &zd) in z.iter().enumerate() {
            let w = self.prior_mean[d] + self.prior_sd[d] * zd;
            let e = w - self.target_mean[d];
            acc += 0.5 * zd * zd - 0.5 * e * e / self.target_var[d];
        }
        acc
    }
}

/// Encode one block: returns the transmitted index and the selected sample.
pub fn astar_encode(
    target: &DiagonalGaussian,
    prior: &DiagonalGaussian,
    settings: &RecSettings,
    block_id: usize,
    gumbel_seed: u64,
) -> Result<(EncodedBlock, Vec<f64>)> {
    let kl_bits = nats_to_bits(kl_divergence(target, prior)?);
    let n = sample_count(kl_bits, settings.t_bits, settings.max_samples_cap, block_id)?;
    let sampler = ProposalSampler::new(prior.dim(), settings.block_seed(block_id))?;
    let ratio = LogRatio::new(target, prior);
    let mut rng = ChaCha8Rng::seed_from_u64(gumbel_seed);
    let found = perturbed_argmax(n, &mut rng, |s, e| {
        let mut z = vec![0.0; sampler.dim()];
        (s..=e)
            .map(|i| {
                sampler.standard_normal_into(i, &mut z);
                ratio.eval(&z)
            })
            .collect()
    })?;
    let sample = sampler.sample(prior, found.index);
    Ok((
        EncodedBlock {
            index: found.index,
            n_samples: n,
            block_id,
        },
        sample,
    ))
}

/// Regenerate the proposal selected by the encoder.
pub fn astar_decode(
    prior: &DiagonalGaussian,
    encoded: &EncodedBlock,
    settings: &RecSettings,
) -> Result<Vec<f64>> {
    if encoded.index == 0 || encoded.index > encoded.n_samples {
        return Err(Error::CorruptStream(format!(
            "block {}: index {} outside 1..={}",
            encoded.block_id, encoded.index, encoded.n_samples
        )));
    }
    if encoded.index > MAX_PROPOSALS {
        return Err(Error::CorruptStream(format!(
            "block {}: index {} too large",
            encoded.block_id, encoded.index
        )));
    }
    let sampler = ProposalSampler::new(prior.dim(), settings.block_seed(encoded.block_id))?;
    Ok(sampler.sample(prior, encoded.index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rec::sobol::scale_to;
    use rand::Rng;

    fn g1(m: f64, v: f64) -> DiagonalGaussian {
        DiagonalGaussian::new(vec![m], vec![v]).unwrap()
    }

    #[test]
    fn sample_counts_and_cap() {
        assert_eq!(sample_count(0.0, 0.0, 1 << 24, 0).unwrap(), 1);
        assert_eq!(sample_count(16.0, 0.0, 1 << 24, 0).unwrap(), 1 << 16);
        assert_eq!(sample_count(15.99, 0.0, 1 << 24, 0).unwrap(), 65083);
        assert_eq!(sample_count(16.0, 2.0, 1 << 24, 0).unwrap(), 1 << 18);
        assert!(matches!(
            sample_count(24.5, 0.0, 1 << 24, 3),
            Err(Error::SampleCapExceeded { block: 3, .. })
        ));
        assert_eq!(index_bits(1), 0);
        assert_eq!(index_bits(2), 1);
        assert_eq!(index_bits(1 << 16), 16);
        assert_eq!(index_bits((1 << 16) + 1), 17);
        assert_eq!(index_bits(65083), 16);
    }

    #[test]
    fn target_equal_to_prior_selects_first_index() {
        let p = DiagonalGaussian::new(vec![0.2, -0.4], vec![0.3, 1.5]).unwrap();
        let settings = RecSettings {
            t_bits: 6.0,
            ..Default::default()
        };
        for seed in 0..20 {
            let (enc, _) = astar_encode(&p, &p, &settings, 0, seed).unwrap();
            assert_eq!(enc.n_samples, 64);
            assert_eq!(enc.index, 1);
        }
    }

    #[test]
    fn single_sample_always_index_one() {
        let settings = RecSettings::default();
        let (enc, w) = astar_encode(&g1(0.0, 1.0), &g1(0.0, 1.0), &settings, 4, 1).unwrap();
        assert_eq!((enc.index, enc.n_samples), (1, 1));
        assert_eq!(astar_decode(&g1(0.0, 1.0), &enc, &settings).unwrap(), w);
    }

    #[test]
    fn round_trip_is_bitwise() {
        let target = DiagonalGaussian::new(vec![0.5, -0.2, 1.0], vec![0.05, 0.1, 0.2]).unwrap();
        let prior = DiagonalGaussian::isotropic(3, 0.0, 1.0).unwrap();
        let settings = RecSettings {
            t_bits: 1.0,
            seed: 17,
            ..Default::default()
        };
        for block in 0..5 {
            let (enc, w) =
                astar_encode(&target, &prior, &settings, block, 99 + block as u64).unwrap();
            assert!(enc.index >= 1 && enc.index <= enc.n_samples);
            let back = astar_decode(&prior, &enc, &settings).unwrap();
            assert_eq!(back, w);
            let all = super::super::sobol::proposal_samples(
                &prior,
                enc.index,
                settings.block_seed(block),
            )
            .unwrap();
            assert_eq!(all.last().unwrap(), &w);
        }
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let prior = g1(0.0, 1.0);
        let settings = RecSettings::default();
        let bad = EncodedBlock {
            index: 9,
            n_samples: 8,
            block_id: 0,
        };
        assert!(matches!(
            astar_decode(&prior, &bad, &settings),
            Err(Error::CorruptStream(_))
        ));
        let zero = EncodedBlock {
            index: 0,
            n_samples: 8,
            block_id: 0,
        };
        assert!(astar_decode(&prior, &zero, &settings).is_err());
    }

    #[test]
    fn gumbel_chain_is_strictly_decreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut prev = f64::INFINITY;
        for _ in 0..100_000 {
            let g = truncated_gumbel(prev, &mut rng);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn search_is_independent_of_chunking() {
        // A long search crosses several chunks; compare against a sequential scan.
        let n = 3 * CHUNK + 17;
        let ratio = |i: u64| ((i as f64) * 0.37).sin() * 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let got = perturbed_argmax(n, &mut rng, |s, e| (s..=e).map(ratio).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut bound = f64::INFINITY;
        let mut best = (0u64, f64::NEG_INFINITY);
        for i in 1..=n {
            bound = truncated_gumbel(bound, &mut rng);
            let s = bound + ratio(i);
            if s > best.1 {
                best = (i, s);
            }
        }
        assert_eq!(got.index, best.0);
    }

    #[test]
    fn non_finite_weights_are_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = perturbed_argmax(4, &mut rng, |s, e| {
            (s..=e)
                .map(|i| if i == 3 { f64::NAN } else { 0.0 })
                .collect()
        });
        assert!(matches!(r, Err(Error::NonFiniteImportanceWeight(3))));
    }

    #[test]
    fn log_ratio_matches_densities() {
        let target = DiagonalGaussian::new(vec![0.5, -0.2], vec![0.05, 0.4]).unwrap();
        let prior = DiagonalGaussian::new(vec![0.1, 0.0], vec![0.5, 2.0]).unwrap();
        let lr = LogRatio::new(&target, &prior);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let z = [
                rng.random::<f64>() * 4.0 - 2.0,
                rng.random::<f64>() * 4.0 - 2.0,
            ];
            let w = scale_to(&prior, &z);
            let direct = target.log_density(&w).unwrap() - prior.log_density(&w).unwrap();
            assert!((lr.eval(&z) - direct).abs() < 1e-10);
        }
    }
}
