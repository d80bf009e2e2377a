//! Short-time Fourier analysis and weighted overlap-add synthesis.

use std::f64::consts::PI;
use std::ops::Range;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

const COLA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    Hann,
    SqrtHann,
    Rect,
}

impl Window {
    /// Periodic analysis window of length `n`.
    pub fn analysis(self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
                match self {
                    Window::Hann => hann,
                    Window::SqrtHann => hann.sqrt(),
                    Window::Rect => 1.0,
                }
            })
            .collect()
    }

    /// Synthesis window paired with this analysis window.
    ///
    /// Hann analysis is inverted by plain overlap-add, square-root Hann by
    /// weighted overlap-add with the same window.
    pub fn synthesis(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann | Window::Rect => vec![1.0; n],
            Window::SqrtHann => Window::SqrtHann.analysis(n),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Window::Hann),
            "sqrt_hann" => Ok(Window::SqrtHann),
            "rect" => Ok(Window::Rect),
            other => Err(Error::InvalidParameter(format!("unknown window '{other}'"))),
        }
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Window::Hann => "hann",
            Window::SqrtHann => "sqrt_hann",
            Window::Rect => "rect",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    frame_length: usize,
    hop_length: usize,
    window: Window,
}

impl Default for StftParams {
    /// 512-sample frames with 50% overlap and a square-root Hann window
    /// (32 ms at 16 kHz).
    fn default() -> Self {
        Self {
            frame_length: 512,
            hop_length: 256,
            window: Window::SqrtHann,
        }
    }
}

impl StftParams {
    pub fn new(frame_length: usize, hop_length: usize, window: Window) -> Result<Self> {
        if frame_length < 2 || !frame_length.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "frame length {frame_length} is not a power of two >= 2"
            )));
        }
        if hop_length == 0 || hop_length > frame_length || !frame_length.is_multiple_of(hop_length)
        {
            return Err(Error::InvalidParameter(format!(
                "hop {hop_length} must divide frame length {frame_length}"
            )));
        }
        Ok(Self {
            frame_length,
            hop_length,
            window,
        })
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    pub fn hop_length(&self) -> usize {
        self.hop_length
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn bins(&self) -> usize {
        self.frame_length / 2 + 1
    }

    /// Number of frames for a signal of `len` samples, tail zero-padded.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_length {
            return 0;
        }
        1 + (len - self.frame_length).div_ceil(self.hop_length)
    }

    /// Centre frequency of `bin` in Hz.
    pub fn bin_frequency(&self, bin: usize, sample_rate: u32) -> f64 {
        bin as f64 * sample_rate as f64 / self.frame_length as f64
    }

    /// Samples that are covered by a full set of overlapping frames.
    pub fn interior(&self, len: usize) -> Range<usize> {
        let start = self.frame_length - self.hop_length;
        let end = len.min(self.frame_count(len) * self.hop_length);
        start.min(end)..end
    }

    /// Steady-state sum of analysis times synthesis window over all frames
    /// overlapping one sample; fails when that sum is not constant.
    pub fn cola_gain(&self) -> Result<f64> {
        let n = self.frame_length;
        let a = self.window.analysis(n);
        let s = self.window.synthesis(n);
        let sums: Vec<f64> = (0..self.hop_length)
            .map(|offset| {
                (offset..n)
                    .step_by(self.hop_length)
                    .map(|i| a[i] * s[i])
                    .sum()
            })
            .collect();
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        let ripple = if mean > 0.0 {
            (max - min) / mean
        } else {
            f64::INFINITY
        };
        if ripple > COLA_TOLERANCE {
            return Err(Error::NotCola {
                hop: self.hop_length,
                ripple,
            });
        }
        Ok(mean)
    }
}

/// One-sided complex STFT of a single channel, stored frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex64>,
    bins: usize,
    frames: usize,
    params: StftParams,
    sample_rate: u32,
    signal_len: usize,
}

impl Spectrogram {
    pub fn zeros(params: StftParams, sample_rate: u32, frames: usize, signal_len: usize) -> Self {
        let bins = params.bins();
        Self {
            data: vec![Complex64::new(0.0, 0.0); bins * frames],
            bins,
            frames,
            params,
            sample_rate,
            signal_len,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn params(&self) -> StftParams {
        self.params
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Length of the signal the spectrogram was computed from.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    #[inline]
    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[frame * self.bins + bin]
    }

    #[inline]
    pub fn set(&mut self, bin: usize, frame: usize, value: Complex64) {
        self.data[frame * self.bins + bin] = value;
    }

    pub fn frame(&self, frame: usize) -> &[Complex64] {
        &self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    pub fn frame_mut(&mut self, frame: usize) -> &mut [Complex64] {
        &mut self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    /// Coefficients in frame-major order.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Magnitude squared of every coefficient, frame-major.
    pub fn power(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mean_power(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    pub fn scaled(&self, gain: f64) -> Spectrogram {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= gain);
        out
    }

    /// Multiplies every coefficient by the matching real gain (frame-major).
    pub fn apply_gains(&self, gains: &[f64]) -> Result<Spectrogram> {
        if gains.len() != self.data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} gains for {} coefficients",
                gains.len(),
                self.data.len()
            )));
        }
        let mut out = self.clone();
        out.data.iter_mut().zip(gains).for_each(|(c, g)| *c *= *g);
        Ok(out)
    }

    pub fn check_same_shape(&self, other: &Spectrogram) -> Result<()> {
        if self.bins != other.bins || self.frames != other.frames {
            return Err(Error::DimensionMismatch(format!(
                "spectrogram {}x{} vs {}x{}",
                self.bins, self.frames, other.bins, other.frames
            )));
        }
        Ok(())
    }
}

fn require_mono(signal: &AudioBuffer) -> Result<()> {
    if signal.channel_count() != 1 {
        return Err(Error::InvalidBuffer(format!(
            "expected one channel, got {}",
            signal.channel_count()
        )));
    }
    Ok(())
}

/// Windowed one-sided DFT of every frame. Frame `v` covers samples
/// `[v * hop, v * hop + frame_length)`; the last frame is zero-padded.
pub fn stft(signal: &AudioBuffer, params: StftParams) -> Result<Spectrogram> {
    require_mono(signal)?;
    stft_samples(signal.channel(0), signal.sample_rate(), params)
}

pub fn stft_samples(samples: &[f64], sample_rate: u32, params: StftParams) -> Result<Spectrogram> {
    let n = params.frame_length;
    if samples.len() < n {
        return Err(Error::InsufficientSamples {
            needed: n,
            got: samples.len(),
        });
    }
    let frames = params.frame_count(samples.len());
    let window = params.window.analysis(n);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut spec = Spectrogram::zeros(params, sample_rate, frames, samples.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for v in 0..frames {
        let start = v * params.hop_length;
        for (i, slot) in buf.iter_mut().enumerate() {
            let x = samples.get(start + i).copied().unwrap_or(0.0);
            *slot = Complex64::new(x * window[i], 0.0);
        }
        fft.process(&mut buf);
        spec.frame_mut(v).copy_from_slice(&buf[..params.bins()]);
    }
    Ok(spec)
}

/// Overlap-add resynthesis, truncated to the original signal length.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    let samples = istft_samples(spec)?;
    AudioBuffer::mono(samples, spec.sample_rate)
}

pub fn istft_samples(spec: &Spectrogram) -> Result<Vec<f64>> {
    let params = spec.params;
    let gain = params.cola_gain()?;
    let n = params.frame_length;
    let hop = params.hop_length;
    let synthesis = params.window.synthesis(n);
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let total = if spec.frames == 0 {
        0
    } else {
        (spec.frames - 1) * hop + n
    };
    let mut out = vec![0.0; total.max(spec.signal_len)];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let scale = 1.0 / (n as f64 * gain);
    for v in 0..spec.frames {
        let frame = spec.frame(v);
        buf[..frame.len()].copy_from_slice(frame);
        for k in 1..n / 2 {
            buf[n - k] = frame[k].conj();
        }
        ifft.process(&mut buf);
        let start = v * hop;
        for i in 0..n {
            out[start + i] += buf[i].re * synthesis[i] * scale;
        }
    }
    out.truncate(spec.signal_len);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn params_validation() {
        assert!(StftParams::new(500, 250, Window::Hann).is_err());
        assert!(StftParams::new(512, 0, Window::Hann).is_err());
        assert!(StftParams::new(512, 200, Window::Hann).is_err());
        assert!(StftParams::new(512, 128, Window::Hann).is_ok());
    }

    #[test]
    fn cola_pairs() {
        for w in [Window::Hann, Window::SqrtHann] {
            for hop in [256, 128] {
                assert!(StftParams::new(512, hop, w).unwrap().cola_gain().is_ok());
            }
        }
        let bad = StftParams::new(512, 512, Window::Hann).unwrap();
        assert!(matches!(bad.cola_gain(), Err(Error::NotCola { .. })));
    }

    #[test]
    fn zero_signal_gives_zero_spectrogram() {
        let x = AudioBuffer::mono(vec![0.0; 2000], 16000).unwrap();
        let s = stft(&x, StftParams::default()).unwrap();
        assert!(s.data().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn short_signal_is_rejected() {
        let x = AudioBuffer::mono(vec![0.0; 100], 16000).unwrap();
        assert!(matches!(
            stft(&x, StftParams::default()),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn bin_centred_sinusoid_is_concentrated() {
        let p = StftParams::new(256, 128, Window::Rect).unwrap();
        let k = 19;
        let x: Vec<f64> = (0..256 * 8)
            .map(|i| (2.0 * PI * ((k * i) % 256) as f64 / 256.0).cos())
            .collect();
        let s = stft_samples(&x, 16000, p).unwrap();
        for v in 0..s.frames() {
            let peak = s.get(k, v).norm_sqr();
            for b in (0..s.bins()).filter(|&b| b != k) {
                let rel = s.get(b, v).norm_sqr() / peak;
                assert!(rel <= 1e-30, "bin {b} frame {v}: {rel:e}");
            }
        }
    }

    #[test]
    fn parseval_per_frame() {
        let p = StftParams::new(512, 256, Window::Hann).unwrap();
        let x = noise(16000, 3);
        let s = stft_samples(&x, 16000, p).unwrap();
        let w = Window::Hann.analysis(512);
        let mut time_energy = 0.0;
        for v in 0..s.frames() {
            for (i, wi) in w.iter().enumerate() {
                let xi = x.get(v * 256 + i).copied().unwrap_or(0.0);
                time_energy += (xi * wi).powi(2);
            }
        }
        let n = 512.0;
        let mut spec_energy = 0.0;
        for v in 0..s.frames() {
            let f = s.frame(v);
            spec_energy += f[0].norm_sqr() + f[256].norm_sqr();
            spec_energy += 2.0 * f[1..256].iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        spec_energy /= n;
        assert!(((spec_energy - time_energy) / time_energy).abs() <= 1e-9);
    }

    #[test]
    fn round_trip_interior() {
        for (w, hop) in [
            (Window::SqrtHann, 256),
            (Window::SqrtHann, 128),
            (Window::Hann, 256),
            (Window::Hann, 128),
        ] {
            let p = StftParams::new(512, hop, w).unwrap();
            let x = noise(16000, 11);
            let y = istft_samples(&stft_samples(&x, 16000, p).unwrap()).unwrap();
            assert_eq!(y.len(), x.len());
            let err = p
                .interior(x.len())
                .map(|i| (x[i] - y[i]).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-10, "{w} hop {hop}: {err:e}");
        }
    }

    #[test]
    fn zero_and_scaled_synthesis() {
        let p = StftParams::default();
        let z = Spectrogram::zeros(p, 16000, 10, 2816);
        assert!(istft_samples(&z).unwrap().iter().all(|&v| v == 0.0));

        let x = noise(4000, 5);
        let s = stft_samples(&x, 16000, p).unwrap();
        let full = istft_samples(&s).unwrap();
        let half = istft_samples(&s.scaled(0.5)).unwrap();
        for (a, b) in full.iter().zip(&half) {
            assert!((0.5 * a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn non_cola_synthesis_fails() {
        let p = StftParams::new(512, 512, Window::SqrtHann).unwrap();
        let s = Spectrogram::zeros(p, 16000, 2, 1024);
        assert!(matches!(istft(&s), Err(Error::NotCola { .. })));
    }

    #[test]
    fn linearity() {
        let p = StftParams::default();
        let x = noise(3000, 1);
        let y = noise(3000, 2);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.3 * a - 1.7 * b).collect();
        let sx = stft_samples(&x, 16000, p).unwrap();
        let sy = stft_samples(&y, 16000, p).unwrap();
        let sm = stft_samples(&mix, 16000, p).unwrap();
        for ((a, b), m) in sx.data().iter().zip(sy.data()).zip(sm.data()) {
            assert!((a * 0.3 - b * 1.7 - m).norm() <= 1e-12);
        }
    }
}
