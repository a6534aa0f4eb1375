//! Learning the weight prior by coordinate descent over a training set.
//!
//! Each epoch first optimizes every datum's posterior against the current
//! prior (in parallel, warm-started from the previous epoch) and then
//! replaces the prior with the closed-form minimizer of the average KL.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{EmbeddedBatch, FrozenWeights, Inr, InrConfig, SignalBatch};
use crate::optim::{PosteriorOptimizer, VariationalParams};
use crate::partition::{partition_weights, BlockPartition};
use crate::rec::{astar_encode, IndexHistogram, RecSettings};
use crate::seed::derive_seed;
use crate::variational::{
    kl_divergence, nats_to_bits, per_coordinate_kl, prior_update, read_f64_array, write_f64_array,
    DiagonalGaussian,
};

const MAGIC: &[u8; 4] = b"CMBR";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSchedule {
    pub epochs: usize,
    pub iters_per_epoch: usize,
    pub first_epoch_iters: usize,
    pub learning_rate: f64,
    pub posterior_var_init: f64,
    /// Reuse one noise draw for every step, making the objective deterministic.
    pub frozen_noise: bool,
    /// Stop once an epoch improves the objective by less than this relative amount.
    pub early_stop_tol: Option<f64>,
}

impl TrainingSchedule {
    pub fn cifar() -> Self {
        Self {
            epochs: 128,
            iters_per_epoch: 100,
            first_epoch_iters: 250,
            learning_rate: 2e-4,
            posterior_var_init: 9e-6,
            frozen_noise: false,
            early_stop_tol: None,
        }
    }

    pub fn kodak() -> Self {
        Self {
            epochs: 96,
            iters_per_epoch: 200,
            first_epoch_iters: 500,
            learning_rate: 1e-4,
            posterior_var_init: 4e-6,
            ..Self::cifar()
        }
    }

    pub fn audio() -> Self {
        Self {
            posterior_var_init: 4e-9,
            ..Self::cifar()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.iters_per_epoch == 0 || self.first_epoch_iters == 0 {
            return Err(Error::InvalidConfig(
                "epoch and iteration counts must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.posterior_var_init > 0.0) {
            return Err(Error::InvalidConfig(
                "learning rate and posterior variance must be positive".into(),
            ));
        }
        if let Some(tol) = self.early_stop_tol {
            if !(tol >= 0.0) {
                return Err(Error::InvalidConfig(
                    "early-stop tolerance must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self::cifar()
    }
}

/// Everything the encoder and decoder share.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorModel {
    config: InrConfig,
    fourier_seed: u64,
    prior: DiagonalGaussian,
    beta: f64,
    c_beta_bits: f64,
    per_weight_kl_bits: Vec<f64>,
    index_histogram: Option<IndexHistogram>,
    content_hash: [u8; 32],
}

impl PriorModel {
    pub fn new(
        config: InrConfig,
        fourier_seed: u64,
        prior: DiagonalGaussian,
        beta: f64,
        c_beta_bits: f64,
        per_weight_kl_bits: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let d = config.param_count();
        if prior.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: prior.dim(),
            });
        }
        if per_weight_kl_bits.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: per_weight_kl_bits.len(),
            });
        }
        if !(beta > 0.0) || !(c_beta_bits >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta {beta} and c_beta {c_beta_bits} out of range"
            )));
        }
        let mut m = Self {
            config,
            fourier_seed,
            prior,
            beta,
            c_beta_bits,
            per_weight_kl_bits,
            index_histogram: None,
            content_hash: [0; 32],
        };
        m.content_hash = m.digest();
        Ok(m)
    }

    pub fn config(&self) -> &InrConfig {
        &self.config
    }

    pub fn fourier_seed(&self) -> u64 {
        self.fourier_seed
    }

    pub fn prior(&self) -> &DiagonalGaussian {
        &self.prior
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c_beta_bits(&self) -> f64 {
        self.c_beta_bits
    }

    pub fn per_weight_kl_bits(&self) -> &[f64] {
        &self.per_weight_kl_bits
    }

    pub fn index_histogram(&self) -> Option<&IndexHistogram> {
        self.index_histogram.as_ref()
    }

    pub fn content_hash(&self) -> &[u8; 32] {
        &self.content_hash
    }

    pub fn set_index_histogram(&mut self, histogram: Option<IndexHistogram>) {
        self.index_histogram = histogram;
        self.content_hash = self.digest();
    }

    pub fn inr(&self) -> Result<Inr> {
        Inr::new(self.config.clone(), self.fourier_seed)
    }

    /// The partition every stream encoded with this prior at `kappa` uses.
    pub fn partition(&self, kappa_bits: f64, permutation_seed: u64) -> Result<BlockPartition> {
        partition_weights(&self.per_weight_kl_bits, kappa_bits, permutation_seed)
    }

    fn write_body<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        self.config.write_to(out)?;
        out.write_all(&self.fourier_seed.to_le_bytes())?;
        out.write_all(&self.beta.to_le_bytes())?;
        out.write_all(&self.c_beta_bits.to_le_bytes())?;
        self.prior.write_to(out)?;
        write_f64_array(out, &self.per_weight_kl_bits)?;
        match &self.index_histogram {
            Some(h) => {
                out.write_all(&[1])?;
                h.write_to(out)
            }
            None => out.write_all(&[0]),
        }
    }

    fn digest(&self) -> [u8; 32] {
        let mut body = Vec::new();
        self.write_body(&mut body)
            .expect("writing to a Vec cannot fail");
        Sha256::digest(&body).into()
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        self.write_body(out)?;
        out.write_all(&self.content_hash)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::CorruptStream("not a prior model file".into()));
        }
        let mut b2 = [0u8; 2];
        input.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != VERSION {
            return Err(Error::CorruptStream(format!(
                "unsupported prior version {version}"
            )));
        }
        let config = InrConfig::read_from(input)?;
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let fourier_seed = u64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let beta = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let c_beta_bits = f64::from_le_bytes(b8);
        let prior = DiagonalGaussian::read_from(input)?;
        let per_weight = read_f64_array(input)?;
        let mut flag = [0u8; 1];
        input.read_exact(&mut flag)?;
        let histogram = match flag[0] {
            0 => None,
            1 => Some(IndexHistogram::read_from(input)?),
            f => return Err(Error::CorruptStream(format!("bad histogram flag {f}"))),
        };
        let mut stored = [0u8; 32];
        input.read_exact(&mut stored)?;
        let mut m = Self::new(config, fourier_seed, prior, beta, c_beta_bits, per_weight)
            .map_err(|e| Error::CorruptStream(e.to_string()))?;
        m.set_index_histogram(histogram);
        if m.content_hash != stored {
            return Err(Error::CorruptStream("prior model digest mismatch".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

/// Objective value around one prior update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochObjective {
    pub epoch: usize,
    /// After the posterior step, before the prior update.
    pub before_update: f64,
    pub after_update: f64,
}

#[derive(Debug, Clone)]
pub struct LearnedPrior {
    pub model: PriorModel,
    pub posteriors: Vec<DiagonalGaussian>,
    /// Objective with the initial posteriors and prior.
    pub initial_objective: f64,
    pub history: Vec<EpochObjective>,
}

/// Sum over data of `distortion + beta · KL(q_m || p)`, with the distortion
/// estimated from one local-reparameterization pass seeded by `noise_seed`.
pub fn training_objective(
    inr: &Inr,
    data: &[EmbeddedBatch],
    posteriors: &[VariationalParams],
    prior: &DiagonalGaussian,
    beta: f64,
    noise_seed: u64,
) -> Result<f64> {
    if data.len() != posteriors.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: posteriors.len(),
        });
    }
    let d = inr.config().param_count();
    let single = BlockPartition::single(d);
    let frozen = FrozenWeights::none(d);
    let terms = data
        .par_iter()
        .zip(posteriors)
        .map(|(batch, q)| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            inr.loss_and_grads(q, prior, batch, &[beta], &single, &frozen, &mut rng)
                .map(|e| e.loss)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

struct PosteriorState {
    params: VariationalParams,
    optimizer: PosteriorOptimizer,
}

fn noise_seed(seed: u64, schedule: &TrainingSchedule, epoch: usize, step: usize) -> u64 {
    if schedule.frozen_noise {
        derive_seed(seed, "noise", 0)
    } else {
        derive_seed(
            derive_seed(seed, "noise", epoch as u64),
            "step",
            step as u64,
        )
    }
}

/// Optimize one posterior for `iters` steps. With frozen noise the objective
/// is deterministic and the best iterate (the start included) is kept.
#[allow(clippy::too_many_arguments)]
fn optimize_posterior(
    inr: &Inr,
    batch: &EmbeddedBatch,
    state: &mut PosteriorState,
    prior: &DiagonalGaussian,
    beta: f64,
    iters: usize,
    schedule: &TrainingSchedule,
    seed: u64,
    epoch: usize,
) -> Result<()> {
    let d = inr.config().param_count();
    let single = BlockPartition::single(d);
    let frozen = FrozenWeights::none(d);
    let mut best: Option<(f64, VariationalParams)> = None;
    for step in 0..=iters {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(seed, schedule, epoch, step));
        let eval = inr.loss_and_grads(
            &state.params,
            prior,
            batch,
            &[beta],
            &single,
            &frozen,
            &mut rng,
        )?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged {
                stage: "prior learning epoch",
                step: epoch,
            });
        }
        if schedule.frozen_noise && best.as_ref().is_none_or(|(b, _)| eval.loss < *b) {
            best = Some((eval.loss, state.params.clone()));
        }
        if step == iters {
            break;
        }
        state
            .optimizer
            .step(&mut state.params, &eval.grad_mean, &eval.grad_log_var);
    }
    if let Some((_, params)) = best {
        state.params = params;
    }
    if !state.params.is_finite() {
        return Err(Error::Diverged {
            stage: "prior learning epoch",
            step: epoch,
        });
    }
    Ok(())
}

/// Alternate posterior optimization and the closed-form prior update.
pub fn learn_prior(
    dataset: &[SignalBatch],
    config: &InrConfig,
    beta: f64,
    schedule: &TrainingSchedule,
    seed: u64,
) -> Result<LearnedPrior> {
    if dataset.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "beta must be positive, got {beta}"
        )));
    }
    schedule.validate()?;
    let fourier_seed = derive_seed(seed, "fourier", 0);
    let inr = Inr::new(config.clone(), fourier_seed)?;
    let data: Vec<EmbeddedBatch> = dataset
        .iter()
        .map(|b| inr.embed(b))
        .collect::<Result<_>>()?;

    let d = config.param_count();
    let mut prior = DiagonalGaussian::new(vec![0.0; d], config.init_variance())?;
    let init = config.init_weights(derive_seed(seed, "init", 0));
    let mut states: Vec<PosteriorState> = data
        .iter()
        .map(|_| PosteriorState {
            params: VariationalParams::with_variance(
                init.values.clone(),
                schedule.posterior_var_init,
            ),
            optimizer: PosteriorOptimizer::new(d, schedule.learning_rate),
        })
        .collect();

    let eval_seed = noise_seed(seed, schedule, 0, 0);
    let objective = |states: &[PosteriorState], prior: &DiagonalGaussian| {
        let params: Vec<VariationalParams> = states.iter().map(|s| s.params.clone()).collect();
        training_objective(&inr, &data, &params, prior, beta, eval_seed)
    };
    let initial_objective = objective(&states, &prior)?;
    let mut history = Vec::with_capacity(schedule.epochs);

    for epoch in 1..=schedule.epochs {
        let iters = if epoch == 1 {
            schedule.first_epoch_iters
        } else {
            schedule.iters_per_epoch
        };
        states
            .par_iter_mut()
            .zip(&data)
            .try_for_each(|(state, batch)| {
                optimize_posterior(
                    &inr, batch, state, &prior, beta, iters, schedule, seed, epoch,
                )
            })?;
        let before_update = objective(&states, &prior)?;
        let posteriors: Vec<DiagonalGaussian> = states
            .iter()
            .map(|s| s.params.to_gaussian())
            .collect::<Result<_>>()?;
        prior = prior_update(&posteriors)?;
        let after_update = objective(&states, &prior)?;
        if !after_update.is_finite() {
            return Err(Error::Diverged {
                stage: "prior learning epoch",
                step: epoch,
            });
        }
        let previous = history
            .last()
            .map_or(initial_objective, |h: &EpochObjective| h.after_update);
        history.push(EpochObjective {
            epoch,
            before_update,
            after_update,
        });
        if let Some(tol) = schedule.early_stop_tol {
            if previous - after_update < tol * previous.abs() {
                break;
            }
        }
    }

    let posteriors: Vec<DiagonalGaussian> = states
        .iter()
        .map(|s| s.params.to_gaussian())
        .collect::<Result<_>>()?;
    let c_beta = estimate_coding_cost(&posteriors, &prior)?;
    let per_weight = per_weight_kl(&posteriors, &prior)?;
    let model = PriorModel::new(
        config.clone(),
        fourier_seed,
        prior,
        beta,
        c_beta,
        per_weight,
    )?;
    Ok(LearnedPrior {
        model,
        posteriors,
        initial_objective,
        history,
    })
}

/// Average total `KL(q_m || p)` over the posteriors, in bits.
pub fn estimate_coding_cost(
    posteriors: &[DiagonalGaussian],
    prior: &DiagonalGaussian,
) -> Result<f64> {
    if posteriors.is_empty() {
        return Err(Error::Empty("posterior list"));
    }
    let mut total = 0.0;
    for q in posteriors {
        total += kl_divergence(q, prior)?;
    }
    Ok(nats_to_bits(total / posteriors.len() as f64))
}

/// Per-coordinate KL averaged over the posteriors, in bits.
pub fn per_weight_kl(
    posteriors: &[DiagonalGaussian],
    prior: &DiagonalGaussian,
) -> Result<Vec<f64>> {
    if posteriors.is_empty() {
        return Err(Error::Empty("posterior list"));
    }
    let mut acc = vec![0.0; prior.dim()];
    for q in posteriors {
        if q.dim() != prior.dim() {
            return Err(Error::DimensionMismatch {
                expected: prior.dim(),
                got: q.dim(),
            });
        }
        for (a, k) in acc.iter_mut().zip(per_coordinate_kl(q, prior)) {
            *a += k;
        }
    }
    let m = posteriors.len() as f64;
    Ok(acc.into_iter().map(|a| nats_to_bits(a / m)).collect())
}

/// A*-encode training posteriors blockwise (no fine-tuning) and tabulate the indices.
pub fn collect_index_histogram(
    model: &PriorModel,
    posteriors: &[DiagonalGaussian],
    kappa_bits: f64,
    rec: &RecSettings,
    permutation_seed: u64,
) -> Result<IndexHistogram> {
    let partition = model.partition(kappa_bits, permutation_seed)?;
    let indices: Vec<Vec<u64>> = posteriors
        .par_iter()
        .enumerate()
        .map(|(m, q)| {
            partition
                .blocks()
                .iter()
                .enumerate()
                .map(|(k, block)| {
                    let gumbel_seed = derive_seed(
                        rec.seed,
                        "histogram-gumbel",
                        (m * partition.len() + k) as u64,
                    );
                    astar_encode(
                        &q.select(block),
                        &model.prior.select(block),
                        rec,
                        k,
                        gumbel_seed,
                    )
                    .map(|(e, _)| e.index)
                })
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(IndexHistogram::from_indices(indices.into_iter().flatten()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FlatWeights;
    use crate::variational::scalar_kl;

    fn tiny_config() -> InrConfig {
        let mut c = InrConfig::new(2, 1, 2, 4, 4);
        c.frequency_scale = 1.0;
        c.omega0 = 3.0;
        c
    }

    fn grid(side: usize, value: impl Fn(f64, f64) -> f64) -> SignalBatch {
        let mut coords = Vec::new();
        let mut targets = Vec::new();
        for r in 0..side {
            for c in 0..side {
                let y = -1.0 + 2.0 * r as f64 / (side - 1) as f64;
                let x = -1.0 + 2.0 * c as f64 / (side - 1) as f64;
                coords.extend([y, x]);
                targets.push(value(y, x));
            }
        }
        SignalBatch::new(coords, targets, 2, 1).unwrap()
    }

    fn quick_schedule(epochs: usize) -> TrainingSchedule {
        TrainingSchedule {
            epochs,
            iters_per_epoch: 60,
            first_epoch_iters: 150,
            learning_rate: 1e-2,
            posterior_var_init: 1e-4,
            frozen_noise: false,
            early_stop_tol: None,
        }
    }

    fn random_gaussians(m: usize, d: usize, seed: u64) -> Vec<DiagonalGaussian> {
        let mut rng = crate::seed::SplitMix64::new(seed);
        let mut u = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (0..m)
            .map(|_| {
                let mean = (0..d).map(|_| 2.0 * u() - 1.0).collect();
                let var = (0..d).map(|_| 0.05 + u()).collect();
                DiagonalGaussian::new(mean, var).unwrap()
            })
            .collect()
    }

    #[test]
    fn schedules_are_valid() {
        for s in [
            TrainingSchedule::cifar(),
            TrainingSchedule::kodak(),
            TrainingSchedule::audio(),
        ] {
            s.validate().unwrap();
        }
        assert_eq!(TrainingSchedule::kodak().first_epoch_iters, 500);
        let bad = TrainingSchedule {
            epochs: 0,
            ..TrainingSchedule::cifar()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn coding_cost_oracles() {
        let qs = random_gaussians(3, 7, 11);
        let p = random_gaussians(1, 7, 12).pop().unwrap();
        assert_eq!(
            estimate_coding_cost(&[p.clone(), p.clone()], &p).unwrap(),
            0.0
        );
        let single = estimate_coding_cost(&qs[..1], &p).unwrap();
        assert!(
            (single - kl_divergence(&qs[0], &p).unwrap() / std::f64::consts::LN_2).abs() < 1e-12
        );

        let mut oracle = 0.0;
        for q in &qs {
            for j in 0..7 {
                oracle += scalar_kl(q.mean()[j], q.variance()[j], p.mean()[j], p.variance()[j]);
            }
        }
        oracle /= 3.0 * std::f64::consts::LN_2;
        let c = estimate_coding_cost(&qs, &p).unwrap();
        assert!((c - oracle).abs() < 1e-9);
        let per = per_weight_kl(&qs, &p).unwrap();
        assert!((per.iter().sum::<f64>() - c).abs() < 1e-9);
        assert!(estimate_coding_cost(&[], &p).is_err());
    }

    #[test]
    fn per_weight_entry_is_zero_where_posterior_equals_prior() {
        let p = DiagonalGaussian::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let q = DiagonalGaussian::new(vec![0.0, 3.0], vec![1.0, 0.5]).unwrap();
        let per = per_weight_kl(&[q], &p).unwrap();
        assert_eq!(per[0], 0.0);
        assert!(per[1] > 0.0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(
            learn_prior(&[], &tiny_config(), 1e-3, &quick_schedule(1), 0),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn single_constant_datum_is_reproduced() {
        let data = vec![grid(5, |_, _| 0.3)];
        let learned = learn_prior(&data, &tiny_config(), 1e-12, &quick_schedule(4), 3).unwrap();
        let q = &learned.posteriors[0];
        let inr = learned.model.inr().unwrap();
        let out = inr
            .forward(
                &FlatWeights {
                    values: q.mean().to_vec(),
                },
                &data[0],
            )
            .unwrap();
        let mse = out.iter().map(|y| (y - 0.3).powi(2)).sum::<f64>() / out.len() as f64;
        assert!(mse < 1e-4, "mse {mse}");
        assert_eq!(learned.model.prior().mean(), q.mean());
        for (pv, qv) in learned.model.prior().variance().iter().zip(q.variance()) {
            assert!((pv - qv).abs() <= 1e-12 * qv.max(1.0));
        }
    }

    #[test]
    fn identical_data_give_identical_posteriors() {
        let datum = grid(4, |y, x| 0.5 + 0.25 * (y * x));
        let learned = learn_prior(
            &[datum.clone(), datum],
            &tiny_config(),
            1e-3,
            &quick_schedule(2),
            9,
        )
        .unwrap();
        let (a, b) = (&learned.posteriors[0], &learned.posteriors[1]);
        assert_eq!(a, b);
        let p = learned.model.prior();
        for j in 0..a.dim() {
            // Averages of two equal numbers: exact up to one rounding.
            assert!((p.mean()[j] - a.mean()[j]).abs() <= 1e-15 * a.mean()[j].abs().max(1e-300));
            assert!((p.variance()[j] - a.variance()[j]).abs() <= 1e-15 * a.variance()[j]);
        }
    }

    #[test]
    fn frozen_noise_objective_never_increases() {
        let data: Vec<SignalBatch> = (0..4)
            .map(|m| {
                grid(8, move |y, x| {
                    0.5 + 0.4 * ((m as f64 + 1.0) * x).sin() * y.cos()
                })
            })
            .collect();
        let schedule = TrainingSchedule {
            frozen_noise: true,
            ..quick_schedule(5)
        };
        let learned = learn_prior(&data, &tiny_config(), 1e-3, &schedule, 21).unwrap();
        let mut previous = learned.initial_objective;
        for h in &learned.history {
            assert!(h.before_update <= previous, "{h:?} after {previous}");
            assert!(h.after_update <= h.before_update, "{h:?}");
            previous = h.after_update;
        }
        assert_eq!(learned.history.len(), 5);
        assert!(previous < 0.9 * learned.initial_objective);
    }

    #[test]
    fn parallel_matches_sequential() {
        let data: Vec<SignalBatch> = (0..3)
            .map(|m| grid(4, move |y, _| 0.1 * m as f64 + 0.2 * y))
            .collect();
        let schedule = quick_schedule(2);
        let par = learn_prior(&data, &tiny_config(), 1e-3, &schedule, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let seq = pool.install(|| learn_prior(&data, &tiny_config(), 1e-3, &schedule, 5).unwrap());
        assert_eq!(par.posteriors, seq.posteriors);
        assert_eq!(par.model, seq.model);
    }

    #[test]
    fn prior_file_round_trip_and_tamper_detection() {
        let data = vec![grid(4, |y, x| 0.5 + 0.1 * y - 0.2 * x)];
        let mut model = learn_prior(&data, &tiny_config(), 1e-3, &quick_schedule(1), 2)
            .unwrap()
            .model;
        model.set_index_histogram(Some(IndexHistogram::from_indices([1, 5, 70])));
        let bytes = model.to_bytes();
        let back = PriorModel::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_bytes(), bytes);
        let mut tampered = bytes.clone();
        let mid = tampered.len() / 2;
        tampered[mid] ^= 1;
        assert!(PriorModel::read_from(&mut tampered.as_slice()).is_err());
        assert!(PriorModel::read_from(&mut &bytes[..bytes.len() - 1]).is_err());
    }
}
