use std::f64::consts::PI;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Length of the default windowed-sinc interpolator.
pub const DEFAULT_DELAY_TAPS: usize = 63;
const KAISER_BETA: f64 = 8.0;
const INTEGER_SNAP: f64 = 1e-12;

/// Impulse response of a (possibly fractional) delay: `y(n) = sum_j
/// taps[j] * x(n - offset - j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayKernel {
    pub offset: isize,
    pub taps: Vec<f64>,
}

impl DelayKernel {
    /// Kaiser-windowed sinc centred on `delay_samples`. Integer delays get a
    /// single unit tap. `tap_count` is forced odd.
    pub fn new(delay_samples: f64, tap_count: usize) -> Self {
        let mut whole = delay_samples.floor();
        let mut frac = delay_samples - whole;
        if frac > 1.0 - INTEGER_SNAP {
            whole += 1.0;
            frac = 0.0;
        }
        let whole = whole as isize;
        if frac < INTEGER_SNAP {
            return Self {
                offset: whole,
                taps: vec![1.0],
            };
        }
        let half = (tap_count.max(3) / 2) as isize;
        let taps = (-half..=half)
            .map(|i| {
                let t = i as f64 - frac;
                sinc(t) * kaiser(t / (half + 1) as f64, KAISER_BETA)
            })
            .collect();
        Self {
            offset: whole - half,
            taps,
        }
    }

    /// Applies the kernel to `x`, keeping the input length; samples outside
    /// `x` are treated as zero.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() as isize;
        (0..n)
            .map(|i| {
                self.taps
                    .iter()
                    .enumerate()
                    .filter_map(|(j, h)| {
                        let src = i - self.offset - j as isize;
                        (0..n).contains(&src).then(|| h * x[src as usize])
                    })
                    .sum()
            })
            .collect()
    }
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

fn kaiser(x: f64, beta: f64) -> f64 {
    let r = 1.0 - x * x;
    if r <= 0.0 {
        return 0.0;
    }
    bessel_i0(beta * r.sqrt()) / bessel_i0(beta)
}

fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Delays every channel by `delay_s` seconds (negative values advance).
pub fn fractional_delay(signal: &AudioBuffer, delay_s: f64) -> Result<AudioBuffer> {
    let delay = delay_s * signal.sample_rate() as f64;
    let channels = signal
        .channels()
        .iter()
        .map(|c| fractional_delay_with(c, delay, DEFAULT_DELAY_TAPS))
        .collect::<Result<Vec<_>>>()?;
    AudioBuffer::new(channels, signal.sample_rate())
}

/// Delays `x` by `delay_samples` using a `tap_count`-tap interpolator.
pub fn fractional_delay_with(x: &[f64], delay_samples: f64, tap_count: usize) -> Result<Vec<f64>> {
    if !delay_samples.is_finite() || delay_samples.abs() >= x.len() as f64 {
        return Err(Error::DelayTooLong {
            delay_samples,
            len: x.len(),
        });
    }
    Ok(DelayKernel::new(delay_samples, tap_count).apply(x))
}
