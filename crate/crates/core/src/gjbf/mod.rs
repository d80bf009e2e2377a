//! Griffiths-Jim beamformer for a broadside target.
//!
//! A broadside source reaches both microphones at the same time, so the
//! fixed branch is the plain channel average and the blocking branch the
//! channel difference, which contains no target at all. An adaptive filter
//! maps the blocking branch onto the interference left in the fixed branch
//! and the difference is the output. The adaptive filter is a block LMS
//! filter run in the frequency domain with overlap-save.

mod fdaf;
mod sweep;

pub use fdaf::{fdaf_gjbf, AdaptiveFilterState, GjbfOutput, TapTrajectory};
pub use sweep::{select_filter_length, sinr_map, SweepPoint, SweepResult, SINR_CAP};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Length of the adaptive filter when none is chosen.
pub const DEFAULT_FILTER_LENGTH: usize = 250;
pub const DEFAULT_STEP_SIZE: f64 = 0.05;
/// Exponential smoothing of the per-bin input power estimate.
pub const DEFAULT_POWER_SMOOTHING: f64 = 0.9;
/// Candidate lengths for the filter-length sweep.
pub const DEFAULT_SWEEP: [usize; 7] = [50, 100, 150, 200, 245, 250, 300];

#[derive(Debug, Clone, PartialEq)]
pub struct GjbfConfig {
    /// Taps of the adaptive filter.
    pub filter_length: usize,
    /// Step size in `(0, 2)`.
    pub step_size: f64,
    /// Samples per adaptation block; defaults to `filter_length`.
    pub block_size: Option<usize>,
    /// Tap leakage per block, in `[0, 1]`.
    pub leak: f64,
    /// Delay applied to the fixed branch; defaults to `filter_length / 2`.
    pub alignment_delay: Option<usize>,
    /// Divide the step in every bin by a smoothed input power estimate.
    pub normalized: bool,
    /// Project the gradient back onto `filter_length` taps each block.
    pub constrained: bool,
    pub power_smoothing: f64,
}

impl Default for GjbfConfig {
    fn default() -> Self {
        Self::with_length(DEFAULT_FILTER_LENGTH)
    }
}

impl GjbfConfig {
    pub fn with_length(filter_length: usize) -> Self {
        Self {
            filter_length,
            step_size: DEFAULT_STEP_SIZE,
            block_size: None,
            leak: 0.0,
            alignment_delay: None,
            normalized: true,
            constrained: true,
            power_smoothing: DEFAULT_POWER_SMOOTHING,
        }
    }

    pub fn block(&self) -> usize {
        self.block_size.unwrap_or(self.filter_length)
    }

    pub fn alignment(&self) -> usize {
        self.alignment_delay.unwrap_or(self.filter_length / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter_length == 0 {
            return Err(Error::InvalidParameter("filter length must be >= 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "step size {} outside (0, 2)",
                self.step_size
            )));
        }
        if self.block() == 0 {
            return Err(Error::InvalidParameter("block size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.leak) {
            return Err(Error::InvalidParameter(format!(
                "leak {} outside [0, 1]",
                self.leak
            )));
        }
        if !(0.0..1.0).contains(&self.power_smoothing) {
            return Err(Error::InvalidParameter(
                "power smoothing outside [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn check_pair(ch1: &AudioBuffer, ch2: &AudioBuffer) -> Result<()> {
    if ch1.channel_count() != 1 || ch2.channel_count() != 1 {
        return Err(Error::InvalidBuffer("branch inputs must be mono".into()));
    }
    ch1.check_same_shape(ch2)
}

/// Upper branch, `w_c = [1/2, 1/2]`: `y_f(n) = (y1(n) + y2(n)) / 2`.
pub fn fixed_path(ch1: &AudioBuffer, ch2: &AudioBuffer) -> Result<AudioBuffer> {
    check_pair(ch1, ch2)?;
    let y = ch1
        .channel(0)
        .iter()
        .zip(ch2.channel(0))
        .map(|(a, b)| (a + b) / 2.0)
        .collect();
    AudioBuffer::mono(y, ch1.sample_rate())
}

/// Lower branch, `B = [1, -1]`: `y1(n) - y2(n)`.
pub fn blocking_path(ch1: &AudioBuffer, ch2: &AudioBuffer) -> Result<AudioBuffer> {
    check_pair(ch1, ch2)?;
    let y = ch1
        .channel(0)
        .iter()
        .zip(ch2.channel(0))
        .map(|(a, b)| a - b)
        .collect();
    AudioBuffer::mono(y, ch1.sample_rate())
}
