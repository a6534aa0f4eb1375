//! Sine-activated MLP over random Fourier features.
//!
//! Flattened weight layout (the decoder relies on it): layers in order,
//! each layer stores its weight matrix of shape `(out, in)` row-major,
//! followed by its `out` biases. Layer 0 consumes the Fourier embedding;
//! every layer except the last applies `sin(omega0 * a)`.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::variational::{scalar_kl, DiagonalGaussian, MIN_VARIANCE};

/// Architecture descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct InrConfig {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Number of dense layers, output layer included.
    pub num_layers: usize,
    pub hidden_units: usize,
    /// Width of the sin/cos embedding (twice the number of frequencies).
    pub fourier_embeddings: usize,
    pub frequency_scale: f64,
    pub omega0: f64,
}

impl Default for InrConfig {
    fn default() -> Self {
        Self::cifar()
    }
}

impl InrConfig {
    pub const DEFAULT_OMEGA0: f64 = 30.0;
    pub const DEFAULT_FREQUENCY_SCALE: f64 = 10.0;

    pub fn new(
        input_dim: usize,
        output_dim: usize,
        num_layers: usize,
        hidden_units: usize,
        fourier_embeddings: usize,
    ) -> Self {
        Self {
            input_dim,
            output_dim,
            num_layers,
            hidden_units,
            fourier_embeddings,
            frequency_scale: Self::DEFAULT_FREQUENCY_SCALE,
            omega0: Self::DEFAULT_OMEGA0,
        }
    }

    /// 4 layers, 16 hidden, 32 embeddings, RGB.
    pub fn cifar() -> Self {
        Self::new(2, 3, 4, 16, 32)
    }

    pub fn kodak_small() -> Self {
        Self::new(2, 3, 6, 48, 64)
    }

    pub fn kodak_large() -> Self {
        Self::new(2, 3, 7, 56, 96)
    }

    pub fn audio() -> Self {
        Self::new(1, 1, 6, 48, 64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.input_dim == 0 || self.output_dim == 0 {
            return bad("input and output dimensions must be positive");
        }
        if self.num_layers < 2 {
            return bad("num_layers must be at least 2");
        }
        if self.hidden_units == 0 {
            return bad("hidden_units must be at least 1");
        }
        if self.fourier_embeddings < 2 || !self.fourier_embeddings.is_multiple_of(2) {
            return bad("fourier_embeddings must be even and at least 2");
        }
        if !(self.frequency_scale > 0.0 && self.frequency_scale.is_finite()) {
            return bad("frequency_scale must be positive");
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return bad("omega0 must be positive");
        }
        Ok(())
    }

    /// `(in, out)` per dense layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.num_layers)
            .map(|l| {
                let input = if l == 0 {
                    self.fourier_embeddings
                } else {
                    self.hidden_units
                };
                let output = if l + 1 == self.num_layers {
                    self.output_dim
                } else {
                    self.hidden_units
                };
                (input, output)
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }

    /// Index of the first weight of each layer, plus the total at the end.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = vec![0];
        for (i, o) in self.layer_shapes() {
            offsets.push(offsets.last().unwrap() + i * o + o);
        }
        offsets
    }

    /// Per-coordinate variance of the SIREN uniform initialisation.
    pub fn init_variance(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for (i, o) in self.layer_shapes() {
            let bound = self.init_bound(i);
            v.extend(std::iter::repeat_n(bound * bound / 3.0, i * o + o));
        }
        v
    }

    fn init_bound(&self, fan_in: usize) -> f64 {
        (6.0 / fan_in as f64).sqrt() / self.omega0
    }

    /// SIREN uniform fan-in initialisation of the flattened weights.
    pub fn init_weights(&self, seed: u64) -> FlatWeights {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(self.param_count());
        for (i, o) in self.layer_shapes() {
            let bound = self.init_bound(i);
            for _ in 0..(i * o + o) {
                values.push(rng.random_range(-bound..bound));
            }
        }
        FlatWeights { values }
    }
}

impl InrConfig {
    /// Fixed little-endian layout: five u32 sizes, then the two f64 scales.
    pub fn write_to<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for v in [
            self.input_dim,
            self.output_dim,
            self.num_layers,
            self.hidden_units,
            self.fourier_embeddings,
        ] {
            out.write_all(&(v as u32).to_le_bytes())?;
        }
        out.write_all(&self.frequency_scale.to_le_bytes())?;
        out.write_all(&self.omega0.to_le_bytes())
    }

    pub fn read_from<R: std::io::Read>(input: &mut R) -> Result<Self> {
        let mut sizes = [0usize; 5];
        let mut b4 = [0u8; 4];
        for s in sizes.iter_mut() {
            input.read_exact(&mut b4)?;
            *s = u32::from_le_bytes(b4) as usize;
        }
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let frequency_scale = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let omega0 = f64::from_le_bytes(b8);
        let c = Self {
            input_dim: sizes[0],
            output_dim: sizes[1],
            num_layers: sizes[2],
            hidden_units: sizes[3],
            fourier_embeddings: sizes[4],
            frequency_scale,
            omega0,
        };
        c.validate()
            .map_err(|e| Error::CorruptStream(e.to_string()))?;
        Ok(c)
    }
}

/// Dense parameter count including biases; the first layer consumes the embedding.
pub fn param_count(config: &InrConfig) -> usize {
    config.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
}

/// Flattened network weights, laid out as described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatWeights {
    pub values: Vec<f64>,
}

impl FlatWeights {
    pub fn new(values: Vec<f64>, config: &InrConfig) -> Result<Self> {
        check_len(config.param_count(), values.len())?;
        Ok(Self { values })
    }

    pub fn zeros(config: &InrConfig) -> Self {
        Self {
            values: vec![0.0; config.param_count()],
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Coordinate/value pairs of one signal. Row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBatch {
    coords: Vec<f64>,
    targets: Vec<f64>,
    input_dim: usize,
    output_dim: usize,
}

impl SignalBatch {
    pub fn new(
        coords: Vec<f64>,
        targets: Vec<f64>,
        input_dim: usize,
        output_dim: usize,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig(
                "batch dimensions must be positive".into(),
            ));
        }
        if !coords.len().is_multiple_of(input_dim) || !targets.len().is_multiple_of(output_dim) {
            return Err(Error::InvalidConfig("ragged batch rows".into()));
        }
        let n = coords.len() / input_dim;
        check_len(n, targets.len() / output_dim)?;
        if coords.iter().chain(&targets).any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("non-finite batch entry".into()));
        }
        Ok(Self {
            coords,
            targets,
            input_dim,
            output_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.input_dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Self::new(
            self.coords.clone(),
            targets,
            self.input_dim,
            self.output_dim,
        )
    }

    /// Rows in `rows`, in order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let (di, dout) = (self.input_dim, self.output_dim);
        let mut coords = Vec::with_capacity(rows.len() * di);
        let mut targets = Vec::with_capacity(rows.len() * dout);
        for &r in rows {
            coords.extend_from_slice(&self.coords[r * di..(r + 1) * di]);
            targets.extend_from_slice(&self.targets[r * dout..(r + 1) * dout]);
        }
        Self {
            coords,
            targets,
            input_dim: di,
            output_dim: dout,
        }
    }
}

/// Random Fourier features `[sin(2π Bx), cos(2π Bx)]` with `B ~ N(0, scale²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFeatures {
    /// `(fourier_embeddings / 2) × input_dim`, row-major.
    frequencies: Vec<f64>,
    input_dim: usize,
}

impl FourierFeatures {
    pub fn new(config: &InrConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, config.frequency_scale)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let count = config.fourier_embeddings / 2 * config.input_dim;
        let frequencies = (0..count).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self {
            frequencies,
            input_dim: config.input_dim,
        })
    }

    pub fn width(&self) -> usize {
        2 * self.frequencies.len() / self.input_dim
    }

    /// Embed row-major coordinates into an `n × width` matrix.
    pub fn embed(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if !coords.len().is_multiple_of(self.input_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: coords.len() % self.input_dim,
            });
        }
        let half = self.width() / 2;
        let mut out = Vec::with_capacity(coords.len() / self.input_dim * 2 * half);
        let mut phases = vec![0.0; half];
        for x in coords.chunks_exact(self.input_dim) {
            for (j, phase) in phases.iter_mut().enumerate() {
                let row = &self.frequencies[j * self.input_dim..(j + 1) * self.input_dim];
                *phase = 2.0 * PI * row.iter().zip(x).map(|(b, c)| b * c).sum::<f64>();
            }
            out.extend(phases.iter().map(|p| p.sin()));
            out.extend(phases.iter().map(|p| p.cos()));
        }
        Ok(out)
    }
}

/// A batch with its embedding precomputed.
#[derive(Debug, Clone)]
pub struct EmbeddedBatch {
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
    pub n: usize,
}

impl EmbeddedBatch {
    pub fn new(batch: &SignalBatch, features: &FourierFeatures) -> Result<Self> {
        Ok(Self {
            features: features.embed(batch.coords())?,
            targets: batch.targets().to_vec(),
            n: batch.len(),
        })
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        let width = self.features.len() / self.n.max(1);
        let out = self.targets.len() / self.n.max(1);
        let mut features = Vec::with_capacity(rows.len() * width);
        let mut targets = Vec::with_capacity(rows.len() * out);
        for &r in rows {
            features.extend_from_slice(&self.features[r * width..(r + 1) * width]);
            targets.extend_from_slice(&self.targets[r * out..(r + 1) * out]);
        }
        Self {
            features,
            targets,
            n: rows.len(),
        }
    }
}

/// The network together with its shared Fourier embedding.
#[derive(Debug, Clone)]
pub struct Inr {
    config: InrConfig,
    features: FourierFeatures,
}

/// Per-coordinate weight moments fed to the stochastic forward pass.
/// Frozen coordinates carry variance exactly zero.
#[derive(Debug, Clone)]
pub struct WeightMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

struct LayerTrace {
    input: Vec<f64>,
    pre: Vec<f64>,
    noise: Vec<f64>,
    std: Vec<f64>,
}

/// Output of [`Inr::loss_and_grads`].
#[derive(Debug, Clone)]
pub struct LossEval {
    /// Summed squared error over the batch.
    pub distortion: f64,
    /// Per-block KL in nats.
    pub block_kl: Vec<f64>,
    /// `distortion + Σ λ_k · block_kl[k]` over unfrozen blocks.
    pub loss: f64,
    pub grad_mean: Vec<f64>,
    pub grad_log_var: Vec<f64>,
}

impl Inr {
    pub fn new(config: InrConfig, fourier_seed: u64) -> Result<Self> {
        let features = FourierFeatures::new(&config, fourier_seed)?;
        Ok(Self { config, features })
    }

    pub fn config(&self) -> &InrConfig {
        &self.config
    }

    pub fn features(&self) -> &FourierFeatures {
        &self.features
    }

    pub fn embed(&self, batch: &SignalBatch) -> Result<EmbeddedBatch> {
        if batch.input_dim() != self.config.input_dim
            || batch.output_dim() != self.config.output_dim
        {
            return Err(Error::InvalidConfig(format!(
                "batch is {}->{}, network is {}->{}",
                batch.input_dim(),
                batch.output_dim(),
                self.config.input_dim,
                self.config.output_dim
            )));
        }
        EmbeddedBatch::new(batch, &self.features)
    }

    /// Deterministic forward pass; returns an `n × output_dim` matrix.
    pub fn forward(&self, weights: &FlatWeights, batch: &SignalBatch) -> Result<Vec<f64>> {
        let embedded = self.embed(batch)?;
        self.forward_embedded(weights, &embedded)
    }

    pub fn forward_embedded(
        &self,
        weights: &FlatWeights,
        batch: &EmbeddedBatch,
    ) -> Result<Vec<f64>> {
        check_len(self.config.param_count(), weights.values.len())?;
        let mut h = batch.features.clone();
        let n = batch.n;
        let offsets = self.config.layer_offsets();
        let shapes = self.config.layer_shapes();
        for (l, &(fan_in, fan_out)) in shapes.iter().enumerate() {
            let w = &weights.values[offsets[l]..offsets[l] + fan_in * fan_out];
            let b = &weights.values[offsets[l] + fan_in * fan_out..offsets[l + 1]];
            let mut next = vec![0.0; n * fan_out];
            for (row, out) in h.chunks_exact(fan_in).zip(next.chunks_exact_mut(fan_out)) {
                for o in 0..fan_out {
                    out[o] = dot(&w[o * fan_in..(o + 1) * fan_in], row) + b[o];
                }
            }
            if l + 1 < shapes.len() {
                let omega = self.config.omega0;
                next.iter_mut().for_each(|a| *a = (omega * *a).sin());
            }
            h = next;
        }
        Ok(h)
    }

    /// Stochastic forward pass sampling each layer's pre-activations from
    /// the Gaussian implied by the weight posterior (local reparameterization).
    pub fn forward_local_reparam<R: Rng + ?Sized>(
        &self,
        posterior: &DiagonalGaussian,
        batch: &SignalBatch,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        check_len(self.config.param_count(), posterior.dim())?;
        let embedded = self.embed(batch)?;
        let moments = WeightMoments {
            mean: posterior.mean().to_vec(),
            variance: posterior.variance().to_vec(),
        };
        let (out, _) = self.stochastic_pass(&moments, &embedded, rng);
        Ok(out)
    }

    fn stochastic_pass<R: Rng + ?Sized>(
        &self,
        moments: &WeightMoments,
        batch: &EmbeddedBatch,
        rng: &mut R,
    ) -> (Vec<f64>, Vec<LayerTrace>) {
        let n = batch.n;
        let offsets = self.config.layer_offsets();
        let shapes = self.config.layer_shapes();
        let mut traces = Vec::with_capacity(shapes.len());
        let mut h = batch.features.clone();
        for (l, &(fan_in, fan_out)) in shapes.iter().enumerate() {
            let split = offsets[l] + fan_in * fan_out;
            let (wm, bm) = (
                &moments.mean[offsets[l]..split],
                &moments.mean[split..offsets[l + 1]],
            );
            let (wv, bv) = (
                &moments.variance[offsets[l]..split],
                &moments.variance[split..offsets[l + 1]],
            );
            let mut pre = vec![0.0; n * fan_out];
            let mut noise = vec![0.0; n * fan_out];
            let mut std = vec![0.0; n * fan_out];
            let mut sq = vec![0.0; fan_in];
            for r in 0..n {
                let row = &h[r * fan_in..(r + 1) * fan_in];
                sq.iter_mut().zip(row).for_each(|(s, x)| *s = x * x);
                for o in 0..fan_out {
                    let k = r * fan_out + o;
                    let m = dot(&wm[o * fan_in..(o + 1) * fan_in], row) + bm[o];
                    let s = dot(&wv[o * fan_in..(o + 1) * fan_in], &sq) + bv[o];
                    let eps: f64 = rng.sample(StandardNormal);
                    let sd = s.max(0.0).sqrt();
                    noise[k] = eps;
                    std[k] = sd;
                    pre[k] = m + sd * eps;
                }
            }
            let next = if l + 1 < shapes.len() {
                let omega = self.config.omega0;
                pre.iter().map(|a| (omega * a).sin()).collect()
            } else {
                pre.clone()
            };
            traces.push(LayerTrace {
                input: std::mem::replace(&mut h, next),
                pre,
                noise,
                std,
            });
        }
        (h, traces)
    }

    /// One-sample estimate of the blockwise objective
    /// `Σ ||y - f(x)||² + Σ_k λ_k · KL_k(q || p)` and its gradients with
    /// respect to the posterior means and log-variances.
    ///
    /// Frozen coordinates enter the forward pass at their fixed values and
    /// receive zero gradient; frozen blocks contribute no KL penalty.
    #[allow(clippy::too_many_arguments)]
    pub fn loss_and_grads<R: Rng + ?Sized>(
        &self,
        params: &crate::optim::VariationalParams,
        prior: &DiagonalGaussian,
        batch: &EmbeddedBatch,
        lambdas: &[f64],
        blocks: &crate::partition::BlockPartition,
        frozen: &FrozenWeights,
        rng: &mut R,
    ) -> Result<LossEval> {
        let d = self.config.param_count();
        check_len(d, params.mean.len())?;
        check_len(d, prior.dim())?;
        check_len(d, frozen.len())?;
        blocks.validate(d)?;
        if lambdas.len() != blocks.len() {
            return Err(Error::InvalidPartition(format!(
                "{} multipliers for {} blocks",
                lambdas.len(),
                blocks.len()
            )));
        }

        let moments = frozen.moments(params);
        let (out, traces) = self.stochastic_pass(&moments, batch, rng);

        let mut distortion = 0.0;
        let mut grad_out = vec![0.0; out.len()];
        for ((g, f), y) in grad_out.iter_mut().zip(&out).zip(&batch.targets) {
            let e = f - y;
            distortion += e * e;
            *g = 2.0 * e;
        }

        let mut grad_mean = vec![0.0; d];
        let mut grad_var = vec![0.0; d];
        self.backward(
            &moments,
            &traces,
            grad_out,
            batch.n,
            &mut grad_mean,
            &mut grad_var,
        );

        let mut grad_log_var: Vec<f64> = grad_var
            .iter()
            .zip(&moments.variance)
            .map(|(g, v)| g * v)
            .collect();

        let mut block_kl = vec![0.0; blocks.len()];
        let (pm, pv) = (prior.mean(), prior.variance());
        for (k, block) in blocks.blocks().iter().enumerate() {
            for &j in block {
                let (mq, vq) = (params.mean[j], moments_variance(params, j));
                block_kl[k] += scalar_kl(mq, vq, pm[j], pv[j]);
                if !frozen.is_frozen(j) {
                    grad_mean[j] += lambdas[k] * (mq - pm[j]) / pv[j];
                    grad_log_var[j] += lambdas[k] * 0.5 * (vq / pv[j] - 1.0);
                }
            }
        }
        for j in 0..d {
            if frozen.is_frozen(j) {
                grad_mean[j] = 0.0;
                grad_log_var[j] = 0.0;
            }
        }
        let rate: f64 = blocks
            .blocks()
            .iter()
            .enumerate()
            .filter(|(_, b)| b.iter().any(|&j| !frozen.is_frozen(j)))
            .map(|(k, _)| lambdas[k] * block_kl[k])
            .sum();

        Ok(LossEval {
            distortion,
            loss: distortion + rate,
            block_kl,
            grad_mean,
            grad_log_var,
        })
    }

    fn backward(
        &self,
        moments: &WeightMoments,
        traces: &[LayerTrace],
        grad_out: Vec<f64>,
        n: usize,
        grad_mean: &mut [f64],
        grad_var: &mut [f64],
    ) {
        let offsets = self.config.layer_offsets();
        let shapes = self.config.layer_shapes();
        let omega = self.config.omega0;
        // Gradient w.r.t. the current layer's output activations.
        let mut g_h = grad_out;
        for l in (0..shapes.len()).rev() {
            let (fan_in, fan_out) = shapes[l];
            let trace = &traces[l];
            let split = offsets[l] + fan_in * fan_out;
            let mut g_a = g_h;
            if l + 1 < shapes.len() {
                g_a.iter_mut()
                    .zip(&trace.pre)
                    .for_each(|(g, a)| *g *= omega * (omega * a).cos());
            }
            let mut g_in = if l > 0 {
                vec![0.0; n * fan_in]
            } else {
                Vec::new()
            };
            let (gwm, gbm) = grad_mean[offsets[l]..offsets[l + 1]].split_at_mut(split - offsets[l]);
            let (gwv, gbv) = grad_var[offsets[l]..offsets[l + 1]].split_at_mut(split - offsets[l]);
            let wm = &moments.mean[offsets[l]..split];
            let wv = &moments.variance[offsets[l]..split];
            for r in 0..n {
                let row = &trace.input[r * fan_in..(r + 1) * fan_in];
                for o in 0..fan_out {
                    let k = r * fan_out + o;
                    let gm = g_a[k];
                    let gs = if trace.std[k] > 0.0 {
                        gm * trace.noise[k] / (2.0 * trace.std[k])
                    } else {
                        0.0
                    };
                    gbm[o] += gm;
                    gbv[o] += gs;
                    let (gwm_row, gwv_row) = (
                        &mut gwm[o * fan_in..(o + 1) * fan_in],
                        &mut gwv[o * fan_in..(o + 1) * fan_in],
                    );
                    for i in 0..fan_in {
                        gwm_row[i] += gm * row[i];
                        gwv_row[i] += gs * row[i] * row[i];
                    }
                    if l > 0 {
                        let gi = &mut g_in[r * fan_in..(r + 1) * fan_in];
                        let (wm_row, wv_row) = (
                            &wm[o * fan_in..(o + 1) * fan_in],
                            &wv[o * fan_in..(o + 1) * fan_in],
                        );
                        for i in 0..fan_in {
                            gi[i] += wm_row[i] * gm + 2.0 * row[i] * wv_row[i] * gs;
                        }
                    }
                }
            }
            g_h = g_in;
        }
    }
}

fn moments_variance(params: &crate::optim::VariationalParams, j: usize) -> f64 {
    params.log_var[j].exp().max(MIN_VARIANCE)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coordinates held fixed at decoded sample values.
#[derive(Debug, Clone)]
pub struct FrozenWeights {
    values: Vec<Option<f64>>,
}

impl FrozenWeights {
    pub fn none(dim: usize) -> Self {
        Self {
            values: vec![None; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_frozen(&self, j: usize) -> bool {
        self.values[j].is_some()
    }

    pub fn freeze(&mut self, indices: &[usize], values: &[f64]) {
        for (&j, &v) in indices.iter().zip(values) {
            self.values[j] = Some(v);
        }
    }

    pub fn value(&self, j: usize) -> Option<f64> {
        self.values[j]
    }

    pub fn all_frozen(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Fully frozen weight vector; `None` while any coordinate is free.
    pub fn to_weights(&self) -> Option<FlatWeights> {
        self.values
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .map(|values| FlatWeights { values })
    }

    pub fn moments(&self, params: &crate::optim::VariationalParams) -> WeightMoments {
        let mut mean = Vec::with_capacity(self.values.len());
        let mut variance = Vec::with_capacity(self.values.len());
        for (j, fixed) in self.values.iter().enumerate() {
            match fixed {
                Some(v) => {
                    mean.push(*v);
                    variance.push(0.0);
                }
                None => {
                    mean.push(params.mean[j]);
                    variance.push(moments_variance(params, j));
                }
            }
        }
        WeightMoments { mean, variance }
    }
}
