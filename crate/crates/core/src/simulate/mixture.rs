use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::delay::{DelayKernel, DEFAULT_DELAY_TAPS};
use super::geometry::ArrayGeometry;
use super::speech::synthetic_speech;
use crate::audio::AudioBuffer;
use crate::conv::fft_convolve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceRole {
    Target,
    Interference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    /// Degrees in `[0, 180]`; 90 is broadside.
    pub azimuth_deg: f64,
    pub signal: AudioBuffer,
    pub role: SourceRole,
}

impl SourceSpec {
    pub fn target(signal: AudioBuffer, azimuth_deg: f64) -> Self {
        Self {
            azimuth_deg,
            signal,
            role: SourceRole::Target,
        }
    }

    pub fn interference(signal: AudioBuffer, azimuth_deg: f64) -> Self {
        Self {
            azimuth_deg,
            signal,
            role: SourceRole::Interference,
        }
    }
}

/// One reflection: an extra copy of every source image `delay_s` later,
/// scaled by `gain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoTap {
    pub delay_s: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub target: SourceSpec,
    pub interferers: Vec<SourceSpec>,
    /// Target power over summed interferer power, in dB.
    pub sir_db: f64,
    /// Sensor noise level relative to the noiseless mixture; `None` for none.
    pub sensor_noise_snr_db: Option<f64>,
    pub echo: Vec<EchoTap>,
}

/// A synthesized scene: the microphone signals and every component image.
///
/// `mixture` is, sample for sample, `target_image + interferer_images[0] +
/// ... + noise_image`, summed in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: AudioBuffer,
    pub target_image: AudioBuffer,
    pub interferer_images: Vec<AudioBuffer>,
    pub noise_image: AudioBuffer,
}

impl Mixture {
    /// Everything that is not target: summed interferers plus sensor noise.
    pub fn interference_image(&self) -> AudioBuffer {
        let noise = &self.noise_image;
        let channels = (0..noise.channel_count())
            .map(|m| {
                (0..noise.len())
                    .map(|n| {
                        let summed: f64 = self
                            .interferer_images
                            .iter()
                            .map(|img| img.channel(m)[n])
                            .sum();
                        summed + noise.channel(m)[n]
                    })
                    .collect()
            })
            .collect();
        AudioBuffer::new(channels, noise.sample_rate()).expect("images share one shape")
    }
}

/// Microphone spacing of the default scene, in metres.
pub const DEFAULT_SPACING_M: f64 = 0.1;
/// Interferer direction of the default scene, in degrees.
pub const DEFAULT_INTERFERER_AZIMUTH: f64 = 60.0;
/// Sensor noise level of the default scene.
pub const DEFAULT_SENSOR_SNR_DB: f64 = 40.0;

/// Two synthetic talkers 10 cm apart: target broadside, one interferer at
/// 60 degrees, 0 dB SIR, light sensor noise, no echo.
pub fn default_scene(
    seed: u64,
    duration_s: f64,
    sample_rate: u32,
) -> Result<(Mixture, ArrayGeometry)> {
    let geometry = ArrayGeometry::pair(DEFAULT_SPACING_M)?;
    let target = synthetic_speech(2 * seed, duration_s, sample_rate)?;
    let interferer = synthetic_speech(2 * seed + 1, duration_s, sample_rate)?;
    let spec = MixtureSpec {
        target: SourceSpec::target(target, 90.0),
        interferers: vec![SourceSpec::interference(
            interferer,
            DEFAULT_INTERFERER_AZIMUTH,
        )],
        sir_db: 0.0,
        sensor_noise_snr_db: Some(DEFAULT_SENSOR_SNR_DB),
        echo: Vec::new(),
    };
    Ok((synthesize_mixture(&spec, &geometry, seed)?, geometry))
}

/// Decaying sparse echo tail whose amplitude falls 60 dB after `t60_s`.
pub fn echo_taps_for_t60(t60_s: f64, seed: u64) -> Vec<EchoTap> {
    if !(t60_s > 0.0) {
        return Vec::new();
    }
    const TAPS: usize = 24;
    const FIRST_REFLECTION_S: f64 = 0.002;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = (t60_s - FIRST_REFLECTION_S).max(0.0);
    let mut delays: Vec<f64> = (0..TAPS)
        .map(|_| FIRST_REFLECTION_S + rng.random::<f64>() * span)
        .collect();
    delays.sort_by(f64::total_cmp);
    delays
        .into_iter()
        .map(|delay_s| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            EchoTap {
                delay_s,
                gain: sign * 0.5 * 10f64.powf(-3.0 * delay_s / t60_s),
            }
        })
        .collect()
}

/// Builds the two-microphone scene described by `spec`.
///
/// All sources are cropped to the shortest one. `seed` drives the sensor
/// noise only.
pub fn synthesize_mixture(
    spec: &MixtureSpec,
    geometry: &ArrayGeometry,
    seed: u64,
) -> Result<Mixture> {
    validate(spec)?;
    let fs = spec.target.signal.sample_rate();
    let len = spec
        .interferers
        .iter()
        .map(|s| s.signal.len())
        .fold(spec.target.signal.len(), usize::min);

    let target_image = spatialize(&spec.target, geometry, &spec.echo, len)?;
    if target_image.mean_power() == 0.0 {
        return Err(Error::EmptyTarget);
    }
    let mut interferer_images = spec
        .interferers
        .iter()
        .map(|s| spatialize(s, geometry, &spec.echo, len))
        .collect::<Result<Vec<_>>>()?;

    let target_power = target_image.mean_power();
    let interference_power = summed_power(&interferer_images, geometry.mic_count(), len);
    if interference_power > 0.0 {
        let wanted = target_power / 10f64.powf(spec.sir_db / 10.0);
        let gain = (wanted / interference_power).sqrt();
        interferer_images.iter_mut().for_each(|img| img.scale(gain));
    }

    let mut noise_image = AudioBuffer::zeros(geometry.mic_count(), len, fs)?;
    if let Some(snr_db) = spec.sensor_noise_snr_db {
        let clean_power =
            target_power + summed_power(&interferer_images, geometry.mic_count(), len);
        let sigma = (clean_power / 10f64.powf(snr_db / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in 0..geometry.mic_count() {
            for v in noise_image.channel_mut(m) {
                *v = sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }

    let mut channels = target_image.channels().to_vec();
    for (m, ch) in channels.iter_mut().enumerate() {
        for (n, v) in ch.iter_mut().enumerate() {
            for img in &interferer_images {
                *v += img.channel(m)[n];
            }
            *v += noise_image.channel(m)[n];
        }
    }
    Ok(Mixture {
        mixture: AudioBuffer::new(channels, fs)?,
        target_image,
        interferer_images,
        noise_image,
    })
}

fn validate(spec: &MixtureSpec) -> Result<()> {
    if spec.target.role != SourceRole::Target {
        return Err(Error::InvalidParameter(
            "target source must have the target role".into(),
        ));
    }
    if spec.target.signal.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if !spec.sir_db.is_finite() {
        return Err(Error::InvalidParameter("SIR must be finite".into()));
    }
    let fs = spec.target.signal.sample_rate();
    for s in std::iter::once(&spec.target).chain(&spec.interferers) {
        if s.signal.channel_count() != 1 {
            return Err(Error::InvalidBuffer("source signals must be mono".into()));
        }
        if s.signal.sample_rate() != fs {
            return Err(Error::SampleRateMismatch(fs, s.signal.sample_rate()));
        }
        if !(0.0..=180.0).contains(&s.azimuth_deg) {
            return Err(Error::InvalidParameter(format!(
                "azimuth {} outside [0, 180]",
                s.azimuth_deg
            )));
        }
    }
    if spec
        .interferers
        .iter()
        .any(|s| s.role != SourceRole::Interference)
    {
        return Err(Error::InvalidParameter(
            "interferers must have the interference role".into(),
        ));
    }
    Ok(())
}

fn summed_power(images: &[AudioBuffer], mics: usize, len: usize) -> f64 {
    if images.is_empty() || len == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for m in 0..mics {
        for n in 0..len {
            let s: f64 = images.iter().map(|img| img.channel(m)[n]).sum();
            total += s * s;
        }
    }
    total / (mics * len) as f64
}

/// Per-microphone image of one source, `len` samples long.
fn spatialize(
    source: &SourceSpec,
    geometry: &ArrayGeometry,
    echo: &[EchoTap],
    len: usize,
) -> Result<AudioBuffer> {
    let fs = source.signal.sample_rate() as f64;
    let x = &source.signal.channel(0)[..len];
    let channels = geometry
        .delays(source.azimuth_deg)
        .into_iter()
        .map(|tau| {
            let direct = tau * fs;
            if direct.abs() >= len as f64 {
                return Err(Error::DelayTooLong {
                    delay_samples: direct,
                    len,
                });
            }
            if echo.is_empty() {
                return Ok(DelayKernel::new(direct, DEFAULT_DELAY_TAPS).apply(x));
            }
            let paths = std::iter::once((direct, 1.0))
                .chain(echo.iter().map(|t| (direct + t.delay_s * fs, t.gain)));
            let (offset, ir) = room_response(paths);
            let full = fft_convolve(x, &ir)?;
            Ok((0..len as isize)
                .map(|n| {
                    let k = n - offset;
                    if k >= 0 && (k as usize) < full.len() {
                        full[k as usize]
                    } else {
                        0.0
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    AudioBuffer::new(channels, source.signal.sample_rate())
}

/// Sum of delayed, scaled interpolation kernels as one impulse response that
/// starts at sample `offset`.
fn room_response(paths: impl Iterator<Item = (f64, f64)>) -> (isize, Vec<f64>) {
    let kernels: Vec<(DelayKernel, f64)> = paths
        .map(|(d, g)| (DelayKernel::new(d, DEFAULT_DELAY_TAPS), g))
        .collect();
    let start = kernels.iter().map(|(k, _)| k.offset).min().unwrap_or(0);
    let end = kernels
        .iter()
        .map(|(k, _)| k.offset + k.taps.len() as isize)
        .max()
        .unwrap_or(0);
    let mut ir = vec![0.0; (end - start) as usize];
    for (k, g) in &kernels {
        let base = (k.offset - start) as usize;
        for (j, h) in k.taps.iter().enumerate() {
            ir[base + j] += g * h;
        }
    }
    (start, ir)
}
