//! Reading and writing images (PNG, binary PPM/PGM) and PCM16 WAV audio.
//!
//! Coordinates lie on an endpoint-inclusive grid over `[-1, 1]` per axis and
//! values are scaled to `[0, 1]`. Image coordinates are `(row, column)`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SignalBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Image,
    Audio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalDescriptor {
    Image {
        height: usize,
        width: usize,
        channels: usize,
    },
    Audio {
        samples: usize,
        sample_rate: u32,
    },
}

impl SignalDescriptor {
    pub fn kind(&self) -> SignalKind {
        match self {
            Self::Image { .. } => SignalKind::Image,
            Self::Audio { .. } => SignalKind::Audio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Image {
                height,
                width,
                channels,
            } => height > 0 && width > 0 && (channels == 1 || channels == 3),
            Self::Audio {
                samples,
                sample_rate,
            } => samples > 0 && sample_rate > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedSignal(format!("{self:?}")))
        }
    }

    /// Number of coordinate rows.
    pub fn points(&self) -> usize {
        match *self {
            Self::Image { height, width, .. } => height * width,
            Self::Audio { samples, .. } => samples,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Image { .. } => 2,
            Self::Audio { .. } => 1,
        }
    }

    pub fn output_dim(&self) -> usize {
        match *self {
            Self::Image { channels, .. } => channels,
            Self::Audio { .. } => 1,
        }
    }

    /// Denominator of the reported rate: pixels, or seconds of audio.
    pub fn rate_denominator(&self) -> f64 {
        match *self {
            Self::Image { height, width, .. } => (height * width) as f64,
            Self::Audio {
                samples,
                sample_rate,
            } => samples as f64 / sample_rate as f64,
        }
    }

    pub fn coordinate_grid(&self) -> Vec<f64> {
        match *self {
            Self::Image { height, width, .. } => {
                let rows = axis(height);
                let cols = axis(width);
                let mut out = Vec::with_capacity(2 * height * width);
                for r in &rows {
                    for c in &cols {
                        out.push(*r);
                        out.push(*c);
                    }
                }
                out
            }
            Self::Audio { samples, .. } => axis(samples),
        }
    }

    /// Batch on this descriptor's grid.
    pub fn batch(&self, values: Vec<f64>) -> Result<SignalBatch> {
        self.validate()?;
        if values.len() != self.points() * self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points() * self.output_dim(),
                got: values.len(),
            });
        }
        SignalBatch::new(
            self.coordinate_grid(),
            values,
            self.input_dim(),
            self.output_dim(),
        )
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let (tag, a, b, c) = match *self {
            Self::Image {
                height,
                width,
                channels,
            } => (0u8, height as u32, width as u32, channels as u32),
            Self::Audio {
                samples,
                sample_rate,
            } => (1u8, samples as u32, sample_rate, 0),
        };
        out.write_all(&[tag])?;
        for v in [a, b, c] {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut tag = [0u8; 1];
        input.read_exact(&mut tag)?;
        let mut v = [0u32; 3];
        let mut b4 = [0u8; 4];
        for x in v.iter_mut() {
            input.read_exact(&mut b4)?;
            *x = u32::from_le_bytes(b4);
        }
        let d = match tag[0] {
            0 => Self::Image {
                height: v[0] as usize,
                width: v[1] as usize,
                channels: v[2] as usize,
            },
            1 => Self::Audio {
                samples: v[0] as usize,
                sample_rate: v[1],
            },
            t => return Err(Error::CorruptStream(format!("unknown signal kind {t}"))),
        };
        d.validate()
            .map_err(|e| Error::CorruptStream(e.to_string()))?;
        Ok(d)
    }
}

/// `n` evenly spaced points from -1 to 1 inclusive; a single point sits at 0.
pub fn axis(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let last = (n - 1) as f64;
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / last).collect()
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

pub fn load_signal(path: &Path, kind: SignalKind) -> Result<(SignalBatch, SignalDescriptor)> {
    let ext = extension(path);
    match (kind, ext.as_str()) {
        (SignalKind::Image, "png") => load_png(path),
        (SignalKind::Image, "ppm" | "pgm" | "pnm") => load_pnm(path),
        (SignalKind::Audio, "wav") => load_wav(path),
        _ => Err(Error::UnsupportedSignal(format!(
            "{} as {kind:?}",
            path.display()
        ))),
    }
}

/// Infer the kind from the file extension.
pub fn kind_of(path: &Path) -> Result<SignalKind> {
    match extension(path).as_str() {
        "png" | "ppm" | "pgm" | "pnm" => Ok(SignalKind::Image),
        "wav" => Ok(SignalKind::Audio),
        _ => Err(Error::UnsupportedSignal(path.display().to_string())),
    }
}

fn image_batch(
    height: usize,
    width: usize,
    channels: usize,
    pixels: &[u8],
) -> Result<(SignalBatch, SignalDescriptor)> {
    let d = SignalDescriptor::Image {
        height,
        width,
        channels,
    };
    let values = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    Ok((d.batch(values)?, d))
}

fn load_png(path: &Path) -> Result<(SignalBatch, SignalDescriptor)> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        image::DynamicImage::ImageLuma8(buf) => image_batch(h, w, 1, buf.as_raw()),
        image::DynamicImage::ImageRgb8(buf) => image_batch(h, w, 3, buf.as_raw()),
        other => Err(Error::UnsupportedSignal(format!(
            "{}: only 8-bit grey or RGB PNG is supported, got {:?}",
            path.display(),
            other.color()
        ))),
    }
}

fn pnm_token<R: BufRead>(input: &mut R) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        if input.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0];
        if c == b'#' && token.is_empty() {
            let mut skip = Vec::new();
            input.read_until(b'\n', &mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(c as char);
    }
    if token.is_empty() {
        return Err(Error::UnsupportedSignal("truncated PNM header".into()));
    }
    Ok(token)
}

fn load_pnm(path: &Path) -> Result<(SignalBatch, SignalDescriptor)> {
    let mut input = BufReader::new(std::fs::File::open(path)?);
    let magic = pnm_token(&mut input)?;
    let channels = match magic.as_str() {
        "P6" => 3,
        "P5" => 1,
        m => return Err(Error::UnsupportedSignal(format!("PNM type {m}"))),
    };
    let mut num = || -> Result<usize> {
        pnm_token(&mut input)?
            .parse()
            .map_err(|_| Error::UnsupportedSignal("bad PNM header".into()))
    };
    let (w, h, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(Error::UnsupportedSignal(format!(
            "PNM maxval {maxval}; only 255 is supported"
        )));
    }
    let mut pixels = vec![0u8; w * h * channels];
    input
        .read_exact(&mut pixels)
        .map_err(|_| Error::UnsupportedSignal("truncated PNM data".into()))?;
    image_batch(h, w, channels, &pixels)
}

fn load_wav(path: &Path) -> Result<(SignalBatch, SignalDescriptor)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1
        || spec.bits_per_sample != 16
        || spec.sample_format != hound::SampleFormat::Int
    {
        return Err(Error::UnsupportedSignal(format!(
            "{}: need mono PCM16, got {spec:?}",
            path.display()
        )));
    }
    let samples: Vec<i16> = reader
        .samples::<i16>()
        .collect::<std::result::Result<_, _>>()?;
    let d = SignalDescriptor::Audio {
        samples: samples.len(),
        sample_rate: spec.sample_rate,
    };
    let values = samples.iter().map(|&s| pcm_to_unit(s)).collect();
    Ok((d.batch(values)?, d))
}

/// Affine map of PCM16 onto `[0, 1)`.
pub fn pcm_to_unit(s: i16) -> f64 {
    (s as f64 / 32768.0 + 1.0) / 2.0
}

pub fn unit_to_pcm(v: f64) -> i16 {
    let x = (v.clamp(0.0, 1.0) * 2.0 - 1.0) * 32768.0;
    x.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn unit_to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Write `values` (row-major, `points × channels`) in the container chosen by the extension.
pub fn save_signal(values: &[f64], descriptor: &SignalDescriptor, path: &Path) -> Result<()> {
    descriptor.validate()?;
    let expected = descriptor.points() * descriptor.output_dim();
    if values.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: values.len(),
        });
    }
    let ext = extension(path);
    match (*descriptor, ext.as_str()) {
        (
            SignalDescriptor::Image {
                height,
                width,
                channels,
            },
            "png",
        ) => {
            let bytes: Vec<u8> = values.iter().map(|&v| unit_to_byte(v)).collect();
            let color = if channels == 3 {
                image::ExtendedColorType::Rgb8
            } else {
                image::ExtendedColorType::L8
            };
            image::save_buffer(path, &bytes, width as u32, height as u32, color)?;
            Ok(())
        }
        (
            SignalDescriptor::Image {
                height,
                width,
                channels,
            },
            "ppm" | "pgm" | "pnm",
        ) => {
            let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
            let magic = if channels == 3 { "P6" } else { "P5" };
            write!(out, "{magic}\n{width} {height}\n255\n")?;
            let bytes: Vec<u8> = values.iter().map(|&v| unit_to_byte(v)).collect();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
        (SignalDescriptor::Audio { sample_rate, .. }, "wav") => {
            let spec = hound::WavSpec {
                channels: 1,
                sample_rate,
                bits_per_sample: 16,
                sample_format: hound::SampleFormat::Int,
            };
            let mut w = hound::WavWriter::create(path, spec)?;
            for &v in values {
                w.write_sample(unit_to_pcm(v))?;
            }
            w.finalize()?;
            Ok(())
        }
        (d, _) => Err(Error::UnsupportedSignal(format!(
            "cannot write {:?} to {}",
            d.kind(),
            path.display()
        ))),
    }
}
