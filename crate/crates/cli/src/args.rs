use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bayesinr",
    version,
    about = "Compress images and audio with Bayesian implicit neural representations"
)]
pub struct Cli {
    /// Worker threads (multi-file commands run one file per worker).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a weight prior from a directory of training signals.
    TrainPrior(TrainArgs),
    /// Encode one signal against a learned prior.
    Compress(CompressArgs),
    /// Decode a compressed stream.
    Decompress(DecompressArgs),
    /// Compress a set of signals under several priors and tabulate rate and quality.
    RdCurve(RdArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulePreset {
    Cifar,
    Kodak,
    Audio,
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Dense layers, including the output layer.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Hidden units per layer.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Number of Fourier embedding frequencies.
    #[arg(long)]
    pub fourier: Option<usize>,
    /// Standard deviation of the Fourier frequencies.
    #[arg(long)]
    pub frequency_scale: Option<f64>,
    /// Sine frequency of the hidden activations.
    #[arg(long)]
    pub omega0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Base hyperparameters; defaults to `cifar` for images and `audio` for audio.
    #[arg(long, value_enum)]
    pub schedule: Option<SchedulePreset>,
    /// Coordinate-descent epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Posterior steps per datum in each later epoch.
    #[arg(long)]
    pub iters_per_epoch: Option<usize>,
    /// Posterior steps per datum in the first epoch.
    #[arg(long)]
    pub first_epoch_iters: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Initial posterior variance.
    #[arg(long)]
    pub posterior_var: Option<f64>,
    /// Reuse one noise draw for every step.
    #[arg(long)]
    pub frozen_noise: bool,
    /// Stop when an epoch improves the objective by less than this fraction.
    #[arg(long)]
    pub early_stop: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of training images (PNG/PPM/PGM) or audio (WAV).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output prior file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rate-distortion trade-off weight.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Seed from which every named sub-seed is derived.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also store an index histogram collected at this block budget (bits).
    #[arg(long)]
    pub histogram_kappa: Option<f64>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args)]
pub struct CodecArgs {
    /// Coding budget per block, in bits.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Oversampling exponent in bits.
    #[arg(long)]
    pub t: Option<f64>,
    /// Posterior fitting iterations.
    #[arg(long)]
    pub fit_iters: Option<usize>,
    /// Fine-tuning iterations between blocks; 0 disables fine-tuning.
    #[arg(long)]
    pub fine_tune_iters: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Initial posterior variance.
    #[arg(long)]
    pub posterior_var: Option<f64>,
    /// Iterations between KL weight updates while fitting.
    #[arg(long)]
    pub adjust_period: Option<usize>,
    /// Iterations between KL weight updates while fine-tuning.
    #[arg(long)]
    pub fine_tune_adjust_period: Option<usize>,
    /// Factor by which a block's KL weight moves at each update.
    #[arg(long)]
    pub lambda_step: Option<f64>,
    /// Width of the band below the budget where KL weights are left alone.
    #[arg(long)]
    pub buffer: Option<f64>,
    /// Most extra fine-tuning steps spent keeping blocks under the sample cap.
    #[arg(long)]
    pub rate_guard_iters: Option<usize>,
    /// Share of the points sampled for each fitting step.
    #[arg(long)]
    pub batch_fraction: Option<f64>,
    /// Largest number of proposals searched per block.
    #[arg(long)]
    pub sample_cap: Option<u64>,
    /// Entropy-code indices with the histogram stored in the prior.
    #[arg(long)]
    pub histogram: bool,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Signal to compress, or stream to decode.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Prior file from train-prior.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Output stream.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the encoder-side reconstruction.
    #[arg(long)]
    pub recon: Option<PathBuf>,
    /// Seed from which every named sub-seed is derived.
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct DecompressArgs {
    /// Signal to compress, or stream to decode.
    #[arg(long)]
    pub input: PathBuf,
    /// Prior file from train-prior.
    #[arg(long)]
    pub prior: PathBuf,
    /// Output signal; the container follows the extension.
    #[arg(long)]
    pub out: PathBuf,
    /// Original signal, for reporting PSNR.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Also write the manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RdArgs {
    /// Signal files or directories of them.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    /// Prior files, one curve point each.
    #[arg(long, num_args = 1.., required = true)]
    pub priors: Vec<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed from which every named sub-seed is derived.
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Leave the timing columns empty so reruns produce identical files.
    #[arg(long)]
    pub omit_timings: bool,
    #[command(flatten)]
    pub codec: CodecArgs,
}
