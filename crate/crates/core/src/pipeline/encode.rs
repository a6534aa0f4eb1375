use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bitstream::{CompressedObject, StreamHeader};
use super::fit::{fit_embedded, run_steps, FineTuneSettings, PosteriorFit};
use crate::error::{Error, Result};
use crate::io::SignalDescriptor;
use crate::model::{EmbeddedBatch, FlatWeights, FrozenWeights, Inr, SignalBatch};
use crate::optim::VariationalParams;
use crate::partition::BlockPartition;
use crate::prior::PriorModel;
use crate::rec::sobol::GENERATOR_VERSION;
use crate::rec::{
    astar_decode, astar_encode, code_indices, decode_indices, index_bits, EncodedBlock, RecSettings,
};
use crate::seed::derive_seed;
use crate::variational::{kl_divergence, nats_to_bits, DiagonalGaussian};

/// Stream-level choices and every seed the encoder consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecSettings {
    pub kappa_bits: f64,
    pub rec: RecSettings,
    pub permutation_seed: u64,
    pub gumbel_seed: u64,
    pub noise_seed: u64,
    pub use_histogram: bool,
    /// Keep a copy of the posterior after each block's fine-tuning.
    pub record_snapshots: bool,
}

impl CodecSettings {
    /// Budget `kappa_bits`, `t = 0` and named sub-seeds of `seed`.
    pub fn from_seed(seed: u64, kappa_bits: f64) -> Self {
        Self {
            kappa_bits,
            rec: RecSettings {
                seed: derive_seed(seed, "proposals", 0),
                ..RecSettings::default()
            },
            permutation_seed: derive_seed(seed, "permutation", 0),
            gumbel_seed: derive_seed(seed, "gumbel", 0),
            noise_seed: derive_seed(seed, "noise", 0),
            use_histogram: false,
            record_snapshots: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EncodeOutcome {
    pub object: CompressedObject,
    /// Output of the network at the transmitted weights, on the descriptor grid.
    pub reconstruction: Vec<f64>,
    /// `δ_k` in bits when block k was encoded.
    pub block_kl_bits: Vec<f64>,
    pub encoded: Vec<EncodedBlock>,
    pub weights: FlatWeights,
    pub snapshots: Vec<VariationalParams>,
    /// Extra fine-tuning steps spent pulling blocks back under the sample cap.
    pub rate_guard_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub fit_s: f64,
    pub rec_s: f64,
}

#[derive(Debug, Clone)]
pub struct Compressed {
    pub outcome: EncodeOutcome,
    /// Block KLs and weights right after posterior fitting.
    pub fitted_kl_bits: Vec<f64>,
    pub fitted_lambdas: Vec<f64>,
    pub timings: Timings,
}

struct Progress {
    frozen: FrozenWeights,
    encoded: Vec<EncodedBlock>,
    deltas: Vec<f64>,
    snapshots: Vec<VariationalParams>,
    guard_steps: usize,
}

fn check_datum(
    datum: &SignalBatch,
    descriptor: &SignalDescriptor,
    model: &PriorModel,
) -> Result<()> {
    descriptor.validate()?;
    let c = model.config();
    if descriptor.input_dim() != c.input_dim || descriptor.output_dim() != c.output_dim {
        return Err(Error::InvalidConfig(format!(
            "{:?} signal does not match a {}->{} network",
            descriptor.kind(),
            c.input_dim,
            c.output_dim
        )));
    }
    if datum.len() != descriptor.points()
        || datum.coords() != descriptor.coordinate_grid().as_slice()
    {
        return Err(Error::InvalidConfig(
            "datum is not on its descriptor's coordinate grid".into(),
        ));
    }
    Ok(())
}

/// Encode blocks in order, freezing each at `draw`'s sample and fine-tuning
/// the rest between blocks.
#[allow(clippy::too_many_arguments)]
fn progressive<F>(
    inr: &Inr,
    batch: &EmbeddedBatch,
    fit: &mut PosteriorFit,
    model: &PriorModel,
    partition: &BlockPartition,
    fine: &FineTuneSettings,
    codec: &CodecSettings,
    mut draw: F,
) -> Result<Progress>
where
    F: FnMut(
        usize,
        &DiagonalGaussian,
        &DiagonalGaussian,
    ) -> Result<(Option<EncodedBlock>, Vec<f64>)>,
{
    let d = model.config().param_count();
    partition.validate(d)?;
    if fit.lambdas.len() != partition.len() || fit.params.dim() != d {
        return Err(Error::InvalidPartition(
            "posterior does not match the partition".into(),
        ));
    }
    let prior = model.prior();
    let mut frozen = FrozenWeights::none(d);
    let mut encoded = Vec::with_capacity(partition.len());
    let mut deltas = Vec::with_capacity(partition.len());
    let mut snapshots = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(codec.noise_seed, "fine-tune", 0));
    let cap_bits = (codec.rec.max_samples_cap as f64).log2();
    let mut guard_steps = 0;
    for (k, block) in partition.blocks().iter().enumerate() {
        let p = prior.select(block);
        let mut q = fit.params.to_gaussian()?.select(block);
        let mut delta = nats_to_bits(kl_divergence(&q, &p)?);
        while delta + codec.rec.t_bits > cap_bits
            && guard_steps < fine.rate_guard_iterations
            && fine.inter_block_iterations > 0
        {
            let n = fine
                .inter_block_iterations
                .min(fine.rate_guard_iterations - guard_steps);
            run_steps(
                inr,
                batch,
                prior,
                partition,
                fit,
                &frozen,
                n,
                fine.fine_tune_adjust_period,
                fine,
                &mut rng,
                "rate guard iteration",
            )?;
            guard_steps += n;
            q = fit.params.to_gaussian()?.select(block);
            delta = nats_to_bits(kl_divergence(&q, &p)?);
            if delta <= partition.kappa_bits() {
                break;
            }
        }
        deltas.push(delta);
        let (enc, sample) = draw(k, &q, &p)?;
        encoded.extend(enc);
        frozen.freeze(block, &sample);
        for (&j, &v) in block.iter().zip(&sample) {
            fit.params.mean[j] = v;
        }
        if k + 1 < partition.len() && fine.inter_block_iterations > 0 {
            run_steps(
                inr,
                batch,
                prior,
                partition,
                fit,
                &frozen,
                fine.inter_block_iterations,
                fine.fine_tune_adjust_period,
                fine,
                &mut rng,
                "fine-tuning iteration",
            )?;
        }
        if codec.record_snapshots {
            snapshots.push(fit.params.clone());
        }
    }
    Ok(Progress {
        frozen,
        encoded,
        deltas,
        snapshots,
        guard_steps,
    })
}

fn grid_output(
    inr: &Inr,
    weights: &FlatWeights,
    descriptor: &SignalDescriptor,
) -> Result<Vec<f64>> {
    let n = descriptor.points();
    let features = inr.features().embed(&descriptor.coordinate_grid())?;
    let batch = EmbeddedBatch {
        features,
        targets: vec![0.0; n * descriptor.output_dim()],
        n,
    };
    inr.forward_embedded(weights, &batch)
}

/// Blockwise A* coding with fine-tuning of the not-yet-coded blocks in between.
pub fn progressive_encode(
    datum: &SignalBatch,
    descriptor: &SignalDescriptor,
    mut fit: PosteriorFit,
    model: &PriorModel,
    partition: &BlockPartition,
    fine: &FineTuneSettings,
    codec: &CodecSettings,
) -> Result<EncodeOutcome> {
    check_datum(datum, descriptor, model)?;
    fine.validate()?;
    let histogram = if codec.use_histogram {
        Some(
            model
                .index_histogram()
                .ok_or_else(|| Error::InvalidConfig("prior model has no index histogram".into()))?,
        )
    } else {
        None
    };
    let inr = model.inr()?;
    let batch = inr.embed(datum)?;
    let progress = progressive(
        &inr,
        &batch,
        &mut fit,
        model,
        partition,
        fine,
        codec,
        |k, q, p| {
            let seed = derive_seed(codec.gumbel_seed, "block", k as u64);
            let (enc, sample) = astar_encode(q, p, &codec.rec, k, seed)?;
            Ok((Some(enc), sample))
        },
    )?;
    let weights = progress.frozen.to_weights().expect("every block is frozen");
    let reconstruction = grid_output(&inr, &weights, descriptor)?;
    let header = StreamHeader {
        config: model.config().clone(),
        prior_hash: *model.content_hash(),
        signal: *descriptor,
        rec_seed: codec.rec.seed,
        t_bits: codec.rec.t_bits,
        kappa_bits: partition.kappa_bits(),
        permutation_seed: partition.permutation_seed(),
        sample_cap: codec.rec.max_samples_cap,
        generator_version: GENERATOR_VERSION,
        histogram: histogram.is_some(),
        index_widths: progress
            .encoded
            .iter()
            .map(|e| index_bits(e.n_samples))
            .collect(),
    };
    let payload = code_indices(&progress.encoded, histogram)?;
    Ok(EncodeOutcome {
        object: CompressedObject { header, payload },
        reconstruction,
        block_kl_bits: progress.deltas,
        encoded: progress.encoded,
        weights,
        snapshots: progress.snapshots,
        rate_guard_steps: progress.guard_steps,
    })
}

/// Reference path that freezes each block at an exact sample from its
/// current posterior instead of an A* sample. Returns the reconstruction
/// and the summed `δ_k` in bits.
pub fn exact_sample_reference(
    datum: &SignalBatch,
    descriptor: &SignalDescriptor,
    mut fit: PosteriorFit,
    model: &PriorModel,
    partition: &BlockPartition,
    fine: &FineTuneSettings,
    codec: &CodecSettings,
) -> Result<(Vec<f64>, f64)> {
    check_datum(datum, descriptor, model)?;
    fine.validate()?;
    let inr = model.inr()?;
    let batch = inr.embed(datum)?;
    let progress = progressive(
        &inr,
        &batch,
        &mut fit,
        model,
        partition,
        fine,
        codec,
        |k, q, _| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(codec.gumbel_seed, "exact", k as u64));
            Ok((None, q.sample(&mut rng)))
        },
    )?;
    let weights = progress.frozen.to_weights().expect("every block is frozen");
    Ok((
        grid_output(&inr, &weights, descriptor)?,
        progress.deltas.iter().sum(),
    ))
}

/// Partition, fit and progressively encode one signal.
pub fn compress(
    datum: &SignalBatch,
    descriptor: &SignalDescriptor,
    model: &PriorModel,
    fine: &FineTuneSettings,
    codec: &CodecSettings,
) -> Result<Compressed> {
    check_datum(datum, descriptor, model)?;
    let partition = model.partition(codec.kappa_bits, codec.permutation_seed)?;
    let inr = model.inr()?;
    let batch = inr.embed(datum)?;
    let start = Instant::now();
    let fit = fit_embedded(&inr, &batch, model, &partition, fine, codec.noise_seed)?;
    let fit_s = start.elapsed().as_secs_f64();
    let fitted_kl_bits = fit.block_kl_bits(model.prior(), &partition);
    let fitted_lambdas = fit.lambdas.clone();
    let start = Instant::now();
    let outcome = progressive_encode(datum, descriptor, fit, model, &partition, fine, codec)?;
    let rec_s = start.elapsed().as_secs_f64();
    Ok(Compressed {
        outcome,
        fitted_kl_bits,
        fitted_lambdas,
        timings: Timings { fit_s, rec_s },
    })
}

/// Rebuild the signal from a stream and the prior it was encoded against.
pub fn decompress(obj: &CompressedObject, model: &PriorModel) -> Result<Vec<f64>> {
    let h = &obj.header;
    if &h.prior_hash != model.content_hash() || &h.config != model.config() {
        return Err(Error::PriorMismatch);
    }
    if h.generator_version != GENERATOR_VERSION {
        return Err(Error::CorruptStream(format!(
            "proposal generator version {}",
            h.generator_version
        )));
    }
    let partition = model.partition(h.kappa_bits, h.permutation_seed)?;
    if partition.len() != h.block_count() {
        return Err(Error::CorruptStream(format!(
            "header lists {} blocks, partition has {}",
            h.block_count(),
            partition.len()
        )));
    }
    let histogram = if h.histogram {
        Some(model.index_histogram().ok_or(Error::PriorMismatch)?)
    } else {
        None
    };
    let indices = decode_indices(&obj.payload, &h.index_widths, histogram)?;
    let rec = RecSettings {
        t_bits: h.t_bits,
        max_samples_cap: h.sample_cap,
        seed: h.rec_seed,
    };
    let prior = model.prior();
    let mut values = vec![0.0; model.config().param_count()];
    for (block, enc) in partition.blocks().iter().zip(&indices) {
        let sample = astar_decode(&prior.select(block), enc, &rec)?;
        for (&j, v) in block.iter().zip(sample) {
            values[j] = v;
        }
    }
    let inr = model.inr()?;
    grid_output(&inr, &FlatWeights { values }, &h.signal)
}
