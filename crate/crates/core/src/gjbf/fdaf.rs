use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{blocking_path, fixed_path, GjbfConfig};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

const DIVERGENCE_LIMIT: f64 = 1e6;
const REGULARIZATION: f64 = 1e-6;

/// Adaptive-branch filter after the last processed block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveFilterState {
    /// Time-domain taps `w_a`.
    pub taps: Vec<f64>,
    /// Overlap-save transform of the taps, `filter_length + block` points.
    pub frequency_state: Vec<Complex64>,
    /// Last `filter_length` blocking-branch samples.
    pub input_history: Vec<f64>,
    /// Smoothed per-bin input power used for step normalization.
    pub power: Vec<f64>,
}

/// Frequency-domain filter used for every block of a run, so that the run
/// can be repeated on other inputs with adaptation switched off.
#[derive(Debug, Clone, PartialEq)]
pub struct TapTrajectory {
    filter_length: usize,
    block: usize,
    alignment: usize,
    weights: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone)]
pub struct GjbfOutput {
    /// Beamformer output on the input timebase.
    pub z: AudioBuffer,
    /// Adaptive-branch output, aligned like `z`.
    pub y_b: AudioBuffer,
    /// Fixed-branch output.
    pub y_f: AudioBuffer,
    pub final_state: AdaptiveFilterState,
    pub trajectory: TapTrajectory,
}

struct OverlapSave {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl OverlapSave {
    fn new(filter_length: usize, block: usize) -> Self {
        let n = filter_length + block;
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(self.n, Complex64::new(0.0, 0.0));
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut spec);
        let scale = 1.0 / self.n as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Last `block` samples of the circular product: the linear filter output.
    fn filter(&self, input: &[Complex64], weights: &[Complex64], block: usize) -> Vec<f64> {
        let product = input.iter().zip(weights).map(|(x, w)| x * w).collect();
        let y = self.inverse(product);
        y[self.n - block..].to_vec()
    }
}

/// Runs the Griffiths-Jim beamformer with a frequency-domain adaptive filter.
///
/// The fixed branch is delayed by `config.alignment()` samples so the
/// adaptive filter can model a two-sided response; the returned signals are
/// advanced by the same amount and have the input length.
pub fn fdaf_gjbf(ch1: &AudioBuffer, ch2: &AudioBuffer, config: &GjbfConfig) -> Result<GjbfOutput> {
    config.validate()?;
    let y_f = fixed_path(ch1, ch2)?;
    let u = blocking_path(ch1, ch2)?;
    let len = ch1.len();
    let taps = config.filter_length;
    if len <= 2 * taps {
        return Err(Error::InsufficientSamples {
            needed: 2 * taps + 1,
            got: len,
        });
    }
    let block = config.block();
    let delay = config.alignment();
    let os = OverlapSave::new(taps, block);
    let n = os.n;
    let blocks = (len + delay).div_ceil(block);
    let total = blocks * block;

    let reference = padded(u.channel(0), total);
    let desired: Vec<f64> = (0..total)
        .map(|i| {
            i.checked_sub(delay)
                .and_then(|j| y_f.channel(0).get(j).copied())
                .unwrap_or(0.0)
        })
        .collect();

    let mut w = vec![0.0; taps];
    let mut weights = vec![Complex64::new(0.0, 0.0); n];
    let mut power = vec![0.0; n];
    let mut power_ready = false;
    let mut buffer = vec![0.0; n];
    let mut filtered = Vec::with_capacity(total);
    let mut trajectory = Vec::with_capacity(blocks);
    let lambda = config.power_smoothing;

    for j in 0..blocks {
        buffer.copy_within(block.., 0);
        buffer[taps..].copy_from_slice(&reference[j * block..(j + 1) * block]);
        let x = os.forward(&buffer);
        let y = os.filter(&x, &weights, block);
        trajectory.push(weights.clone());

        let error: Vec<f64> = desired[j * block..(j + 1) * block]
            .iter()
            .zip(&y)
            .map(|(d, y)| d - y)
            .collect();
        filtered.extend_from_slice(&y);

        let mut err_pad = vec![0.0; n];
        err_pad[taps..].copy_from_slice(&error);
        let e = os.forward(&err_pad);
        let mut gradient: Vec<Complex64> = x.iter().zip(&e).map(|(x, e)| x.conj() * e).collect();

        if config.normalized {
            let energy: f64 = x.iter().map(|c| c.norm_sqr()).sum();
            if !power_ready && energy > 0.0 {
                power
                    .iter_mut()
                    .zip(&x)
                    .for_each(|(p, c)| *p = c.norm_sqr());
                power_ready = true;
            } else {
                power
                    .iter_mut()
                    .zip(&x)
                    .for_each(|(p, c)| *p = lambda * *p + (1.0 - lambda) * c.norm_sqr());
            }
            let eps = REGULARIZATION * power.iter().sum::<f64>() / n as f64 + f64::MIN_POSITIVE;
            gradient
                .iter_mut()
                .zip(&power)
                .for_each(|(g, p)| *g /= p + eps);
        }

        let keep = 1.0 - config.leak;
        if config.constrained {
            let g = os.inverse(gradient);
            for (wk, gk) in w.iter_mut().zip(&g[..taps]) {
                *wk = keep * *wk + config.step_size * gk;
            }
            weights = os.forward(&w);
        } else {
            for (wk, gk) in weights.iter_mut().zip(&gradient) {
                *wk = *wk * keep + gk * config.step_size;
            }
            let full = os.inverse(weights.clone());
            w.copy_from_slice(&full[..taps]);
        }
        if w.iter()
            .any(|t| !t.is_finite() || t.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Diverged { block: j });
        }
    }

    let fs = ch1.sample_rate();
    let y_b: Vec<f64> = filtered[delay..delay + len].to_vec();
    let z: Vec<f64> = y_f
        .channel(0)
        .iter()
        .zip(&y_b)
        .map(|(d, y)| d - y)
        .collect();
    Ok(GjbfOutput {
        z: AudioBuffer::mono(z, fs)?,
        y_b: AudioBuffer::mono(y_b, fs)?,
        y_f,
        final_state: AdaptiveFilterState {
            taps: w,
            frequency_state: weights,
            input_history: buffer[n - taps..].to_vec(),
            power,
        },
        trajectory: TapTrajectory {
            filter_length: taps,
            block,
            alignment: delay,
            weights: trajectory,
        },
    })
}

fn padded(x: &[f64], len: usize) -> Vec<f64> {
    let mut v = x.to_vec();
    v.resize(len, 0.0);
    v
}

impl TapTrajectory {
    /// A trajectory that holds the final filter of `output` for `blocks` blocks.
    pub fn frozen(state: &AdaptiveFilterState, config: &GjbfConfig, blocks: usize) -> Self {
        Self {
            filter_length: config.filter_length,
            block: config.block(),
            alignment: config.alignment(),
            weights: vec![state.frequency_state.clone(); blocks],
        }
    }

    pub fn blocks(&self) -> usize {
        self.weights.len()
    }

    pub fn filter_length(&self) -> usize {
        self.filter_length
    }

    /// Time-domain taps used for block `block`.
    pub fn taps(&self, block: usize) -> Option<Vec<f64>> {
        let w = self.weights.get(block)?;
        let os = OverlapSave::new(self.filter_length, self.block);
        Some(os.inverse(w.clone())[..self.filter_length].to_vec())
    }

    /// Beamformer output of `ch1`/`ch2` with the recorded filters and no
    /// adaptation. Linear in the input. Blocks past the end of the recording
    /// reuse the last filter.
    pub fn replay(&self, ch1: &AudioBuffer, ch2: &AudioBuffer) -> Result<AudioBuffer> {
        let y_f = fixed_path(ch1, ch2)?;
        let u = blocking_path(ch1, ch2)?;
        let len = ch1.len();
        let (taps, block, delay) = (self.filter_length, self.block, self.alignment);
        let os = OverlapSave::new(taps, block);
        let blocks = (len + delay).div_ceil(block);
        let reference = padded(u.channel(0), blocks * block);
        let mut buffer = vec![0.0; os.n];
        let mut filtered = Vec::with_capacity(blocks * block);
        for j in 0..blocks {
            buffer.copy_within(block.., 0);
            buffer[taps..].copy_from_slice(&reference[j * block..(j + 1) * block]);
            let x = os.forward(&buffer);
            let w = self
                .weights
                .get(j)
                .or(self.weights.last())
                .ok_or_else(|| Error::InvalidParameter("empty tap trajectory".into()))?;
            filtered.extend(os.filter(&x, w, block));
        }
        let z = y_f
            .channel(0)
            .iter()
            .zip(&filtered[delay..delay + len])
            .map(|(d, y)| d - y)
            .collect();
        AudioBuffer::mono(z, ch1.sample_rate())
    }
}
