use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{EmbeddedBatch, FrozenWeights, Inr, SignalBatch};
use crate::optim::{PosteriorOptimizer, VariationalParams};
use crate::partition::BlockPartition;
use crate::prior::PriorModel;
use crate::variational::{nats_to_bits, scalar_kl, DiagonalGaussian, MIN_VARIANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneSettings {
    pub fit_iterations: usize,
    pub inter_block_iterations: usize,
    /// Multiplicative step applied to a block's KL weight.
    pub lambda_step: f64,
    pub adjust_period: usize,
    /// Rate-control period during inter-block fine-tuning.
    pub fine_tune_adjust_period: usize,
    /// Width of the band below the budget where a block's weight is left alone.
    pub buffer_bits: f64,
    pub learning_rate: f64,
    pub posterior_var_init: f64,
    /// Most extra fine-tuning steps per signal spent on blocks whose KL would
    /// exceed the sample cap; 0 turns the guard off.
    pub rate_guard_iterations: usize,
    /// Share of the points drawn afresh for each step; 1 uses every point.
    pub batch_fraction: f64,
}

impl Default for FineTuneSettings {
    fn default() -> Self {
        Self {
            fit_iterations: 25000,
            inter_block_iterations: 15,
            lambda_step: 1.05,
            adjust_period: 15,
            fine_tune_adjust_period: 1,
            buffer_bits: 0.4,
            learning_rate: 2e-4,
            posterior_var_init: 9e-6,
            rate_guard_iterations: 1500,
            batch_fraction: 1.0,
        }
    }
}

impl FineTuneSettings {
    pub fn validate(&self) -> Result<()> {
        if self.adjust_period == 0 || self.fine_tune_adjust_period == 0 {
            return Err(Error::InvalidConfig(
                "adjust period must be positive".into(),
            ));
        }
        if !(self.lambda_step > 0.0)
            || !(self.buffer_bits >= 0.0)
            || !(self.learning_rate > 0.0)
            || !(self.posterior_var_init > 0.0)
        {
            return Err(Error::InvalidConfig(
                "fine-tune settings must be positive".into(),
            ));
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "batch fraction {} is outside (0, 1]",
                self.batch_fraction
            )));
        }
        Ok(())
    }
}

/// A fitted posterior together with its per-block KL weights and optimizer state.
#[derive(Debug, Clone)]
pub struct PosteriorFit {
    pub params: VariationalParams,
    pub lambdas: Vec<f64>,
    pub optimizer: PosteriorOptimizer,
}

impl PosteriorFit {
    /// Current `KL(q_k || p_k)` of every block, in bits.
    pub fn block_kl_bits(&self, prior: &DiagonalGaussian, partition: &BlockPartition) -> Vec<f64> {
        block_kl_bits(&self.params, prior, partition)
    }
}

pub(crate) fn block_kl_bits(
    params: &VariationalParams,
    prior: &DiagonalGaussian,
    partition: &BlockPartition,
) -> Vec<f64> {
    let (pm, pv) = (prior.mean(), prior.variance());
    partition
        .blocks()
        .iter()
        .map(|block| {
            let nats: f64 = block
                .iter()
                .map(|&j| {
                    scalar_kl(
                        params.mean[j],
                        params.log_var[j].exp().max(MIN_VARIANCE),
                        pm[j],
                        pv[j],
                    )
                })
                .sum();
            nats_to_bits(nats)
        })
        .collect()
}

/// Rate control: raise the weight of blocks over budget, relax blocks under
/// `kappa - buffer`, leave the rest and all inactive blocks unchanged.
pub fn adjust_lambdas(
    lambdas: &mut [f64],
    deltas_bits: &[f64],
    active: &[bool],
    kappa_bits: f64,
    step: f64,
    buffer_bits: f64,
) {
    for ((l, &d), &a) in lambdas.iter_mut().zip(deltas_bits).zip(active) {
        if !a {
            continue;
        }
        if d > kappa_bits {
            *l *= step;
        } else if d < kappa_bits - buffer_bits {
            *l /= step;
        }
    }
}

/// `iters` Adam steps on the blockwise objective with rate control every
/// `adjust_period` steps (counted from 1 within this call). With a batch
/// fraction below 1 each step sees a fresh random subset of the points and
/// the KL weights are scaled by the subset's share.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_steps(
    inr: &Inr,
    batch: &EmbeddedBatch,
    prior: &DiagonalGaussian,
    partition: &BlockPartition,
    fit: &mut PosteriorFit,
    frozen: &FrozenWeights,
    iters: usize,
    adjust_period: usize,
    settings: &FineTuneSettings,
    rng: &mut ChaCha8Rng,
    stage: &'static str,
) -> Result<()> {
    let active: Vec<bool> = partition
        .blocks()
        .iter()
        .map(|b| b.iter().any(|&j| !frozen.is_frozen(j)))
        .collect();
    let take =
        ((batch.n as f64 * settings.batch_fraction).ceil() as usize).clamp(1, batch.n.max(1));
    for i in 1..=iters {
        let eval = if take < batch.n {
            let rows = rand::seq::index::sample(rng, batch.n, take).into_vec();
            let share = take as f64 / batch.n as f64;
            let lambdas: Vec<f64> = fit.lambdas.iter().map(|l| l * share).collect();
            inr.loss_and_grads(
                &fit.params,
                prior,
                &batch.select(&rows),
                &lambdas,
                partition,
                frozen,
                rng,
            )?
        } else {
            inr.loss_and_grads(
                &fit.params,
                prior,
                batch,
                &fit.lambdas,
                partition,
                frozen,
                rng,
            )?
        };
        if !eval.loss.is_finite() {
            return Err(Error::Diverged { stage, step: i });
        }
        fit.optimizer
            .step_where(&mut fit.params, &eval.grad_mean, &eval.grad_log_var, |j| {
                !frozen.is_frozen(j)
            });
        if i % adjust_period == 0 {
            let deltas: Vec<f64> = eval.block_kl.iter().map(|&n| nats_to_bits(n)).collect();
            adjust_lambdas(
                &mut fit.lambdas,
                &deltas,
                &active,
                partition.kappa_bits(),
                settings.lambda_step,
                settings.buffer_bits,
            );
        }
    }
    if !fit.params.is_finite() {
        return Err(Error::Diverged { stage, step: iters });
    }
    Ok(())
}

/// Fit a posterior to `datum` starting from the prior mean, with every
/// block's KL weight initialised to the prior's β.
pub fn fit_posterior(
    datum: &SignalBatch,
    model: &PriorModel,
    partition: &BlockPartition,
    settings: &FineTuneSettings,
    noise_seed: u64,
) -> Result<PosteriorFit> {
    let inr = model.inr()?;
    let batch = inr.embed(datum)?;
    fit_embedded(&inr, &batch, model, partition, settings, noise_seed)
}

pub(crate) fn fit_embedded(
    inr: &Inr,
    batch: &EmbeddedBatch,
    model: &PriorModel,
    partition: &BlockPartition,
    settings: &FineTuneSettings,
    noise_seed: u64,
) -> Result<PosteriorFit> {
    settings.validate()?;
    let d = model.config().param_count();
    partition.validate(d)?;
    let mut fit = PosteriorFit {
        params: VariationalParams::with_variance(
            model.prior().mean().to_vec(),
            settings.posterior_var_init,
        ),
        lambdas: vec![model.beta(); partition.len()],
        optimizer: PosteriorOptimizer::new(d, settings.learning_rate),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    run_steps(
        inr,
        batch,
        model.prior(),
        partition,
        &mut fit,
        &FrozenWeights::none(d),
        settings.fit_iterations,
        settings.adjust_period,
        settings,
        &mut rng,
        "posterior fit iteration",
    )?;
    Ok(fit)
}
