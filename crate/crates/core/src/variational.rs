//! Factorized Gaussian distributions over network weights.
//!
//! Variances are stored as variances, not standard deviations. All
//! divergences are returned in nats; use [`nats_to_bits`] at the boundary
//! where coding budgets are expressed in bits.

use std::f64::consts::{LN_2, PI};
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Variance floor shared by every posterior and prior.
pub const MIN_VARIANCE: f64 = 1e-12;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

/// `N(mean, diag(variance))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        if mean.len() != variance.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: variance.len(),
            });
        }
        if let Some((index, &value)) = variance
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::NonPositiveVariance { index, value });
        }
        Ok(Self { mean, variance })
    }

    /// Build from a mean and log-variance, clamping the variance at [`MIN_VARIANCE`].
    pub fn from_log_variance(mean: Vec<f64>, log_variance: &[f64]) -> Result<Self> {
        let variance = log_variance
            .iter()
            .map(|lv| lv.exp().max(MIN_VARIANCE))
            .collect();
        Self::new(mean, variance)
    }

    pub fn isotropic(dim: usize, mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![mean; dim], vec![variance; dim])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// Restrict to the coordinates in `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> DiagonalGaussian {
        DiagonalGaussian {
            mean: indices.iter().map(|&i| self.mean[i]).collect(),
            variance: indices.iter().map(|&i| self.variance[i]).collect(),
        }
    }

    pub fn log_density(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        Ok(self
            .mean
            .iter()
            .zip(&self.variance)
            .zip(w)
            .map(|((m, v), x)| log_normal_pdf(*x, *m, *v))
            .sum())
    }

    /// Reparameterized draw `mean + sqrt(variance) * eps`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.variance)
            .map(|(m, v)| {
                let eps: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * eps
            })
            .collect()
    }

    /// Length-prefixed little-endian f64 arrays, mean first.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write_f64_array(out, &self.mean)?;
        write_f64_array(out, &self.variance)
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mean = read_f64_array(input)?;
        let variance = read_f64_array(input)?;
        Self::new(mean, variance).map_err(|e| Error::CorruptStream(e.to_string()))
    }
}

pub(crate) fn write_f64_array<W: Write>(out: &mut W, values: &[f64]) -> std::io::Result<()> {
    out.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_f64_array<R: Read>(input: &mut R) -> Result<Vec<f64>> {
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > (1 << 32) {
        return Err(Error::CorruptStream(format!("array length {len}")));
    }
    let mut values = Vec::with_capacity(len as usize);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        input.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(values)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * PI * variance).ln() + d * d / variance)
}

/// KL divergence of one coordinate, `KL(N(mq, vq) || N(mp, vp))` in nats.
#[inline]
pub fn scalar_kl(mq: f64, vq: f64, mp: f64, vp: f64) -> f64 {
    let d = mq - mp;
    0.5 * ((vp / vq).ln() + (vq + d * d) / vp - 1.0)
}

/// `KL(q || p)` in nats.
pub fn kl_divergence(q: &DiagonalGaussian, p: &DiagonalGaussian) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    Ok(per_coordinate_kl(q, p).sum())
}

/// Per-coordinate KL terms in nats. Caller guarantees equal dimensions.
pub(crate) fn per_coordinate_kl<'a>(
    q: &'a DiagonalGaussian,
    p: &'a DiagonalGaussian,
) -> impl Iterator<Item = f64> + 'a {
    q.mean
        .iter()
        .zip(&q.variance)
        .zip(p.mean.iter().zip(&p.variance))
        .map(|((mq, vq), (mp, vp))| scalar_kl(*mq, *vq, *mp, *vp))
}

/// Closed-form minimizer of the average `KL(q_i || p)` over the prior `p`:
/// the prior mean is the average posterior mean, the prior variance the
/// average of posterior variance plus squared deviation from that mean.
pub fn prior_update(posteriors: &[DiagonalGaussian]) -> Result<DiagonalGaussian> {
    let first = posteriors.first().ok_or(Error::Empty("posterior list"))?;
    let dim = first.dim();
    for q in posteriors {
        check_dim(dim, q.dim())?;
    }
    let m = posteriors.len() as f64;
    let mut mean = vec![0.0; dim];
    for q in posteriors {
        for (acc, mu) in mean.iter_mut().zip(&q.mean) {
            *acc += mu;
        }
    }
    mean.iter_mut().for_each(|x| *x /= m);

    let mut variance = vec![0.0; dim];
    for q in posteriors {
        for ((acc, (mu, v)), mp) in variance
            .iter_mut()
            .zip(q.mean.iter().zip(&q.variance))
            .zip(&mean)
        {
            let d = mu - mp;
            *acc += v + d * d;
        }
    }
    variance
        .iter_mut()
        .for_each(|x| *x = (*x / m).max(MIN_VARIANCE));
    DiagonalGaussian::new(mean, variance)
}
