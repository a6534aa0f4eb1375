//! Splitting the weight vector into coding blocks of roughly equal KL.
//!
//! Weights are shuffled with a seeded permutation and packed with next-fit:
//! the open block takes weights until the next one would push its average
//! KL over the budget, at which point a fresh block is opened.

use crate::error::{Error, Result};
use crate::seed::permutation;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    kappa_bits: f64,
    permutation_seed: u64,
}

impl BlockPartition {
    pub fn from_blocks(
        blocks: Vec<Vec<usize>>,
        kappa_bits: f64,
        permutation_seed: u64,
    ) -> Result<Self> {
        let p = Self {
            blocks,
            kappa_bits,
            permutation_seed,
        };
        let total = p.blocks.iter().map(Vec::len).sum();
        p.validate(total)?;
        Ok(p)
    }

    /// Everything in one block.
    pub fn single(dim: usize) -> Self {
        Self {
            blocks: vec![(0..dim).collect()],
            kappa_bits: f64::INFINITY,
            permutation_seed: 0,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn kappa_bits(&self) -> f64 {
        self.kappa_bits
    }

    pub fn permutation_seed(&self) -> u64 {
        self.permutation_seed
    }

    /// Blocks must be non-empty, disjoint and cover `0..dim` exactly.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        let mut seen = vec![false; dim];
        let mut count = 0;
        for (k, block) in self.blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {k} is empty")));
            }
            for &j in block {
                if j >= dim || seen[j] {
                    return Err(Error::InvalidPartition(format!(
                        "index {j} out of range or repeated"
                    )));
                }
                seen[j] = true;
                count += 1;
            }
        }
        if count != dim {
            return Err(Error::InvalidPartition(format!(
                "covers {count} of {dim} weights"
            )));
        }
        Ok(())
    }
}

/// `max(1, ⌈c_beta / kappa⌉)`.
pub fn compute_block_count(c_beta_bits: f64, kappa_bits: f64) -> Result<usize> {
    if !(kappa_bits > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "kappa must be positive, got {kappa_bits}"
        )));
    }
    if !(c_beta_bits >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "coding cost must be non-negative, got {c_beta_bits}"
        )));
    }
    Ok(((c_beta_bits / kappa_bits).ceil() as usize).max(1))
}

/// Random permutation followed by next-fit bin packing of per-weight KLs (bits).
pub fn partition_weights(
    per_weight_kl_bits: &[f64],
    kappa_bits: f64,
    seed: u64,
) -> Result<BlockPartition> {
    if !(kappa_bits > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "kappa must be positive, got {kappa_bits}"
        )));
    }
    if per_weight_kl_bits.is_empty() {
        return Err(Error::Empty("per-weight KL vector"));
    }
    if let Some(bad) = per_weight_kl_bits.iter().find(|k| !(**k >= 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "per-weight KL must be non-negative, got {bad}"
        )));
    }
    let order = permutation(per_weight_kl_bits.len(), seed);
    let mut blocks = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut fill = 0.0;
    for j in order {
        let kl = per_weight_kl_bits[j];
        if !current.is_empty() && fill + kl > kappa_bits {
            blocks.push(std::mem::take(&mut current));
            fill = 0.0;
        }
        current.push(j);
        fill += kl;
    }
    blocks.push(current);
    Ok(BlockPartition {
        blocks,
        kappa_bits,
        permutation_seed: seed,
    })
}
