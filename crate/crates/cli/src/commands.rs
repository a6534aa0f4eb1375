use std::path::{Path, PathBuf};
use std::time::Instant;

use bayesinr_core::io::{kind_of, load_signal, save_signal, SignalDescriptor, SignalKind};
use bayesinr_core::model::{InrConfig, SignalBatch};
use bayesinr_core::partition::compute_block_count;
use bayesinr_core::pipeline::{
    compress, decompress, measure, CodecSettings, CompressedObject, FineTuneSettings, Metrics,
};
use bayesinr_core::prior::{collect_index_histogram, learn_prior, PriorModel, TrainingSchedule};
use bayesinr_core::rec::DEFAULT_SAMPLE_CAP;
use rayon::prelude::*;

use crate::args::{CodecArgs, CompressArgs, DecompressArgs, RdArgs, SchedulePreset, TrainArgs};
use crate::config::ConfigFile;
use crate::error::{read_file, write_file, CliError, Result};
use crate::manifest::{hex, Manifest};

const NETWORK_KEYS: &[&str] = &["layers", "hidden", "fourier", "frequency-scale", "omega0"];
const SCHEDULE_KEYS: &[&str] = &[
    "schedule",
    "epochs",
    "iters-per-epoch",
    "first-epoch-iters",
    "lr",
    "posterior-var",
    "frozen-noise",
    "early-stop",
];
const CODEC_KEYS: &[&str] = &[
    "kappa",
    "t",
    "fit-iters",
    "fine-tune-iters",
    "lr",
    "posterior-var",
    "adjust-period",
    "fine-tune-adjust-period",
    "lambda-step",
    "buffer",
    "batch-fraction",
    "rate-guard-iters",
    "sample-cap",
    "histogram",
];

fn load(path: &Path) -> Result<(SignalBatch, SignalDescriptor)> {
    Ok(load_signal(path, kind_of(path)?)?)
}

/// Supported signal files in `dir`, sorted by name.
fn signal_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && kind_of(p).is_ok())
        .collect();
    files.sort();
    Ok(files)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn as_usage(e: bayesinr_core::Error) -> CliError {
    CliError::usage(e.to_string())
}

fn network_config(
    cfg: &ConfigFile,
    args: &crate::args::NetworkArgs,
    d: &SignalDescriptor,
) -> Result<InrConfig> {
    let base = match d.kind() {
        SignalKind::Image => InrConfig::cifar(),
        SignalKind::Audio => InrConfig::audio(),
    };
    let mut c = InrConfig::new(
        d.input_dim(),
        d.output_dim(),
        cfg.pick_or(args.layers, "layers", base.num_layers)?,
        cfg.pick_or(args.hidden, "hidden", base.hidden_units)?,
        cfg.pick_or(args.fourier, "fourier", base.fourier_embeddings)?,
    );
    c.frequency_scale = cfg.pick_or(
        args.frequency_scale,
        "frequency-scale",
        base.frequency_scale,
    )?;
    c.omega0 = cfg.pick_or(args.omega0, "omega0", base.omega0)?;
    c.validate().map_err(as_usage)?;
    Ok(c)
}

fn schedule(
    cfg: &ConfigFile,
    args: &crate::args::ScheduleArgs,
    kind: SignalKind,
) -> Result<TrainingSchedule> {
    let preset = match cfg.pick(
        args.schedule.map(|p| format!("{p:?}").to_lowercase()),
        "schedule",
    )? {
        Some(name) => match name.as_str() {
            "cifar" => SchedulePreset::Cifar,
            "kodak" => SchedulePreset::Kodak,
            "audio" => SchedulePreset::Audio,
            other => return Err(CliError::usage(format!("unknown schedule `{other}`"))),
        },
        None if kind == SignalKind::Audio => SchedulePreset::Audio,
        None => SchedulePreset::Cifar,
    };
    let base = match preset {
        SchedulePreset::Cifar => TrainingSchedule::cifar(),
        SchedulePreset::Kodak => TrainingSchedule::kodak(),
        SchedulePreset::Audio => TrainingSchedule::audio(),
    };
    let s = TrainingSchedule {
        epochs: cfg.pick_or(args.epochs, "epochs", base.epochs)?,
        iters_per_epoch: cfg.pick_or(
            args.iters_per_epoch,
            "iters-per-epoch",
            base.iters_per_epoch,
        )?,
        first_epoch_iters: cfg.pick_or(
            args.first_epoch_iters,
            "first-epoch-iters",
            base.first_epoch_iters,
        )?,
        learning_rate: cfg.pick_or(args.lr, "lr", base.learning_rate)?,
        posterior_var_init: cfg.pick_or(
            args.posterior_var,
            "posterior-var",
            base.posterior_var_init,
        )?,
        frozen_noise: cfg.switch(args.frozen_noise, "frozen-noise")?,
        early_stop_tol: cfg.pick(args.early_stop, "early-stop")?,
    };
    s.validate().map_err(as_usage)?;
    Ok(s)
}

fn fine_tune(cfg: &ConfigFile, a: &CodecArgs) -> Result<FineTuneSettings> {
    let d = FineTuneSettings::default();
    let s = FineTuneSettings {
        fit_iterations: cfg.pick_or(a.fit_iters, "fit-iters", d.fit_iterations)?,
        inter_block_iterations: cfg.pick_or(
            a.fine_tune_iters,
            "fine-tune-iters",
            d.inter_block_iterations,
        )?,
        lambda_step: cfg.pick_or(a.lambda_step, "lambda-step", d.lambda_step)?,
        adjust_period: cfg.pick_or(a.adjust_period, "adjust-period", d.adjust_period)?,
        fine_tune_adjust_period: cfg.pick_or(
            a.fine_tune_adjust_period,
            "fine-tune-adjust-period",
            d.fine_tune_adjust_period,
        )?,
        buffer_bits: cfg.pick_or(a.buffer, "buffer", d.buffer_bits)?,
        learning_rate: cfg.pick_or(a.lr, "lr", d.learning_rate)?,
        posterior_var_init: cfg.pick_or(a.posterior_var, "posterior-var", d.posterior_var_init)?,
        rate_guard_iterations: cfg.pick_or(
            a.rate_guard_iters,
            "rate-guard-iters",
            d.rate_guard_iterations,
        )?,
        batch_fraction: cfg.pick_or(a.batch_fraction, "batch-fraction", d.batch_fraction)?,
    };
    s.validate().map_err(as_usage)?;
    Ok(s)
}

fn codec(cfg: &ConfigFile, a: &CodecArgs, seed: u64) -> Result<CodecSettings> {
    let kappa = positive("kappa", cfg.pick_or(a.kappa, "kappa", 16.0)?)?;
    let t = cfg.pick_or(a.t, "t", 0.0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CliError::usage(format!(
            "--t must be non-negative, got {t}"
        )));
    }
    let mut c = CodecSettings::from_seed(seed, kappa);
    c.rec.t_bits = t;
    c.rec.max_samples_cap = cfg.pick_or(a.sample_cap, "sample-cap", DEFAULT_SAMPLE_CAP)?;
    if c.rec.max_samples_cap == 0 {
        return Err(CliError::usage("--sample-cap must be at least 1"));
    }
    c.use_histogram = cfg.switch(a.histogram, "histogram")?;
    Ok(c)
}

fn record_codec(m: &mut Manifest, seed: u64, c: &CodecSettings, f: &FineTuneSettings) {
    m.seed("seed", seed);
    m.seed("seed_proposals", c.rec.seed);
    m.seed("seed_permutation", c.permutation_seed);
    m.seed("seed_gumbel", c.gumbel_seed);
    m.seed("seed_noise", c.noise_seed);
    m.real("kappa_bits", c.kappa_bits);
    m.real("t_bits", c.rec.t_bits);
    m.int("sample_cap", c.rec.max_samples_cap);
    m.flag("histogram", c.use_histogram);
    m.int("fit_iters", f.fit_iterations as u64);
    m.int("fine_tune_iters", f.inter_block_iterations as u64);
    m.real("lr", f.learning_rate);
    m.real("posterior_var", f.posterior_var_init);
    m.int("adjust_period", f.adjust_period as u64);
    m.int("fine_tune_adjust_period", f.fine_tune_adjust_period as u64);
    m.real("lambda_step", f.lambda_step);
    m.real("buffer_bits", f.buffer_bits);
    m.real("batch_fraction", f.batch_fraction);
    m.int("rate_guard_iters", f.rate_guard_iterations as u64);
}

fn record_rate(m: &mut Manifest, metrics: &Metrics, d: &SignalDescriptor) {
    m.int("bits_total", metrics.bits_total as u64);
    m.int("payload_bits", metrics.payload_bits as u64);
    match d.kind() {
        SignalKind::Image => m.real("bpp", metrics.rate),
        SignalKind::Audio => m.real("kbps", metrics.rate / 1000.0),
    }
    m.real("psnr_db", metrics.psnr_db);
    m.real("mse", metrics.mse);
}

fn record_signal(m: &mut Manifest, d: &SignalDescriptor) {
    match *d {
        SignalDescriptor::Image {
            height,
            width,
            channels,
        } => {
            m.text("kind", "image");
            m.int("height", height as u64);
            m.int("width", width as u64);
            m.int("channels", channels as u64);
        }
        SignalDescriptor::Audio {
            samples,
            sample_rate,
        } => {
            m.text("kind", "audio");
            m.int("samples", samples as u64);
            m.int("sample_rate", sample_rate);
        }
    }
}

fn record_network(m: &mut Manifest, c: &InrConfig) {
    m.int("layers", c.num_layers as u64);
    m.int("hidden", c.hidden_units as u64);
    m.int("fourier", c.fourier_embeddings as u64);
    m.real("frequency_scale", c.frequency_scale);
    m.real("omega0", c.omega0);
    m.int("param_count", c.param_count() as u64);
}

pub fn train_prior(args: TrainArgs) -> Result<()> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let mut keys = vec!["data", "out", "beta", "seed", "histogram-kappa", "manifest"];
    keys.extend(NETWORK_KEYS);
    keys.extend(SCHEDULE_KEYS);
    cfg.check_keys(&keys)?;
    let data_dir: PathBuf = cfg.require(args.data, "data")?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let beta = positive("beta", cfg.require(args.beta, "beta")?)?;
    let seed = cfg.pick_or(args.seed, "seed", 0)?;
    let histogram_kappa = cfg.pick(args.histogram_kappa, "histogram-kappa")?;
    let manifest_path: Option<PathBuf> = cfg.pick(args.manifest, "manifest")?;

    let files = signal_files(&data_dir)?;
    if files.is_empty() {
        return Err(CliError::usage(format!(
            "{} holds no PNG, PPM, PGM or WAV files",
            data_dir.display()
        )));
    }
    let loaded: Vec<(SignalBatch, SignalDescriptor)> =
        files.iter().map(|p| load(p)).collect::<Result<_>>()?;
    let first = loaded[0].1;
    if let Some((_, d)) = loaded
        .iter()
        .find(|(_, d)| d.kind() != first.kind() || d.output_dim() != first.output_dim())
    {
        return Err(CliError::Failed(format!(
            "mixed training data: {first:?} and {d:?}"
        )));
    }
    let config = network_config(&cfg, &args.network, &first)?;
    let schedule = schedule(&cfg, &args.schedule, first.kind())?;
    let data: Vec<SignalBatch> = loaded.into_iter().map(|(b, _)| b).collect();

    let start = Instant::now();
    let mut learned = learn_prior(&data, &config, beta, &schedule, seed)?;
    if let Some(kappa) = histogram_kappa {
        let c = CodecSettings::from_seed(seed, positive("histogram-kappa", kappa)?);
        let hist = collect_index_histogram(
            &learned.model,
            &learned.posteriors,
            kappa,
            &c.rec,
            c.permutation_seed,
        )?;
        learned.model.set_index_histogram(Some(hist));
    }
    let train_s = start.elapsed().as_secs_f64();
    learned.model.save(&out)?;

    let model = &learned.model;
    let per_weight = model.per_weight_kl_bits();
    let mut m = Manifest::new("train-prior");
    m.path("data", &data_dir);
    m.int("data_count", data.len() as u64);
    record_signal(&mut m, &first);
    record_network(&mut m, &config);
    m.real("beta", beta);
    m.seed("seed", seed);
    m.seed("seed_fourier", model.fourier_seed());
    m.int("epochs", schedule.epochs as u64);
    m.int("epochs_run", learned.history.len() as u64);
    m.int("iters_per_epoch", schedule.iters_per_epoch as u64);
    m.int("first_epoch_iters", schedule.first_epoch_iters as u64);
    m.real("lr", schedule.learning_rate);
    m.real("posterior_var", schedule.posterior_var_init);
    m.flag("frozen_noise", schedule.frozen_noise);
    m.real("objective_initial", learned.initial_objective);
    if let Some(last) = learned.history.last() {
        m.real("objective_final", last.after_update);
    }
    m.real("c_beta_bits", model.c_beta_bits());
    if let Ok(k) = compute_block_count(model.c_beta_bits(), 16.0) {
        m.int("blocks_at_kappa_16", k as u64);
    }
    m.real(
        "per_weight_kl_bits_min",
        per_weight.iter().copied().fold(f64::INFINITY, f64::min),
    );
    m.real(
        "per_weight_kl_bits_mean",
        per_weight.iter().sum::<f64>() / per_weight.len() as f64,
    );
    m.real(
        "per_weight_kl_bits_max",
        per_weight.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    if let Some(k) = histogram_kappa {
        m.real("histogram_kappa_bits", k);
    }
    m.real("train_s", train_s);
    m.text("prior_hash", &hex(model.content_hash()));
    m.path("out", &out);
    m.emit(manifest_path.as_deref())
}

pub fn compress_cmd(args: CompressArgs) -> Result<()> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let mut keys = vec!["input", "prior", "out", "recon", "seed", "manifest"];
    keys.extend(CODEC_KEYS);
    cfg.check_keys(&keys)?;
    let input: PathBuf = cfg.require(args.input, "input")?;
    let prior_path: PathBuf = cfg.require(args.prior, "prior")?;
    let out: PathBuf = cfg.require(args.out, "out")?;
    let recon: Option<PathBuf> = cfg.pick(args.recon, "recon")?;
    let seed = cfg.pick_or(args.seed, "seed", 0)?;
    let manifest_path: Option<PathBuf> = cfg.pick(args.manifest, "manifest")?;
    let fine = fine_tune(&cfg, &args.codec)?;
    let codec = codec(&cfg, &args.codec, seed)?;

    let model = PriorModel::load(&prior_path)?;
    let (datum, descriptor) = load(&input)?;
    let c = compress(&datum, &descriptor, &model, &fine, &codec)?;
    let obj = &c.outcome.object;
    write_file(&out, &obj.to_bytes()?)?;
    if let Some(p) = &recon {
        save_signal(&c.outcome.reconstruction, &descriptor, p)?;
    }
    let metrics = measure(obj, &c.outcome.reconstruction, &datum)?;

    let mut m = Manifest::new("compress");
    m.path("input", &input);
    record_signal(&mut m, &descriptor);
    m.path("prior", &prior_path);
    m.text("prior_hash", &hex(model.content_hash()));
    m.real("beta", model.beta());
    record_network(&mut m, model.config());
    record_codec(&mut m, seed, &codec, &fine);
    m.int("blocks", c.outcome.encoded.len() as u64);
    m.reals("block_kl_bits", &c.outcome.block_kl_bits);
    m.reals("fitted_block_kl_bits", &c.fitted_kl_bits);
    m.int("rate_guard_steps", c.outcome.rate_guard_steps as u64);
    m.ints(
        "index_widths",
        obj.header.index_widths.iter().map(|&w| w as u64),
    );
    m.int("header_bits", obj.header_bits()? as u64);
    record_rate(&mut m, &metrics, &descriptor);
    m.real("time_learning_posterior_s", c.timings.fit_s);
    m.real("time_rec_fine_tuning_s", c.timings.rec_s);
    m.real("time_total_s", c.timings.fit_s + c.timings.rec_s);
    m.path("out", &out);
    m.emit(manifest_path.as_deref())
}

pub fn decompress_cmd(args: DecompressArgs) -> Result<()> {
    let obj = CompressedObject::from_bytes(&read_file(&args.input)?)?;
    let model = PriorModel::load(&args.prior)?;
    let start = Instant::now();
    let reconstruction = decompress(&obj, &model)?;
    let decode_s = start.elapsed().as_secs_f64();
    let descriptor = obj.header.signal;
    save_signal(&reconstruction, &descriptor, &args.out)?;

    let mut m = Manifest::new("decompress");
    m.path("input", &args.input);
    record_signal(&mut m, &descriptor);
    m.path("prior", &args.prior);
    m.int("blocks", obj.header.block_count() as u64);
    m.real("decode_s", decode_s);
    match &args.reference {
        Some(r) => {
            let (original, d) = load(r)?;
            if d != descriptor {
                return Err(CliError::Failed(format!(
                    "reference {} has shape {d:?}, stream has {descriptor:?}",
                    r.display()
                )));
            }
            m.path("reference", r);
            record_rate(
                &mut m,
                &measure(&obj, &reconstruction, &original)?,
                &descriptor,
            );
        }
        None => {
            let bits = obj.total_bits()?;
            m.int("bits_total", bits as u64);
        }
    }
    m.path("out", &args.out);
    m.emit(args.manifest.as_deref())
}

struct Row {
    datum: String,
    beta: f64,
    result: std::result::Result<(Metrics, f64, f64), String>,
}

fn rd_point(
    datum: &SignalBatch,
    d: &SignalDescriptor,
    model: &PriorModel,
    fine: &FineTuneSettings,
    codec: &CodecSettings,
) -> Result<(Metrics, f64, f64)> {
    let start = Instant::now();
    let c = compress(datum, d, model, fine, codec)?;
    let encode_s = start.elapsed().as_secs_f64();
    let bytes = c.outcome.object.to_bytes()?;
    let start = Instant::now();
    let obj = CompressedObject::from_bytes(&bytes)?;
    let decoded = decompress(&obj, model)?;
    let decode_s = start.elapsed().as_secs_f64();
    if decoded != c.outcome.reconstruction {
        return Err(CliError::Failed(
            "decoded signal differs from the encoder's reconstruction".into(),
        ));
    }
    Ok((measure(&obj, &decoded, datum)?, encode_s, decode_s))
}

pub fn rd_curve(args: RdArgs) -> Result<()> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    let mut keys = vec!["seed"];
    keys.extend(CODEC_KEYS);
    cfg.check_keys(&keys)?;
    let seed = cfg.pick_or(args.seed, "seed", 0)?;
    let fine = fine_tune(&cfg, &args.codec)?;
    let codec = codec(&cfg, &args.codec, seed)?;

    let mut files = Vec::new();
    for p in &args.inputs {
        if p.is_dir() {
            files.extend(signal_files(p)?);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::usage("no input signals"));
    }
    let priors: Vec<PriorModel> = args
        .priors
        .iter()
        .map(|p| PriorModel::load(p))
        .collect::<std::result::Result<_, _>>()?;
    let data: Vec<(SignalBatch, SignalDescriptor)> =
        files.iter().map(|p| load(p)).collect::<Result<_>>()?;

    let rows: Vec<Row> = files
        .par_iter()
        .zip(&data)
        .flat_map_iter(|(path, (datum, d))| {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            priors
                .iter()
                .map(|model| Row {
                    datum: name.clone(),
                    beta: model.beta(),
                    result: rd_point(datum, d, model, &fine, &codec).map_err(|e| e.to_string()),
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut w = csv::Writer::from_path(&args.out)?;
    w.write_record([
        "datum", "beta", "bits", "bpp", "psnr_db", "encode_s", "decode_s",
    ])?;
    let mut failed = 0;
    for row in &rows {
        let beta = row.beta.to_string();
        match &row.result {
            Ok((m, enc, dec)) => {
                let (enc, dec) = if args.omit_timings {
                    (String::new(), String::new())
                } else {
                    (enc.to_string(), dec.to_string())
                };
                w.write_record([
                    row.datum.as_str(),
                    &beta,
                    &m.bits_total.to_string(),
                    &m.rate.to_string(),
                    &m.psnr_db.to_string(),
                    &enc,
                    &dec,
                ])?;
            }
            Err(e) => {
                failed += 1;
                eprintln!("{} (beta {beta}): {e}", row.datum);
                w.write_record([row.datum.as_str(), &beta, "", "", "", "", ""])?;
            }
        }
    }
    w.flush().map_err(|source| CliError::File {
        path: args.out.clone(),
        source,
    })?;
    if failed > 0 {
        return Err(CliError::Failed(format!(
            "{failed} of {} runs failed",
            rows.len()
        )));
    }
    Ok(())
}
