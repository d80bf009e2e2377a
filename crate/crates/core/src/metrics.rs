//! Objective evaluation against ground-truth source images.
//!
//! Output SINR needs the target and the residual interference separately at
//! the output of a nonlinear chain. Linear stages are re-run with frozen
//! parameters on each image; the post-filter gains computed on the mixture
//! are then applied to each component ("shadow gains").

use std::fmt;

use crate::audio::AudioBuffer;
use crate::conv::cross_correlation;
use crate::error::{Error, Result};
use crate::gjbf::TapTrajectory;
use crate::mpdr::{apply_mpdr, MpdrWeights};
use crate::stft::{stft, Spectrogram, StftParams};

/// Magnitude bound of every reported decibel value.
pub const DB_CAP: f64 = 200.0;
/// Delay search range of the aligned metrics, in samples.
pub const DEFAULT_MAX_LAG: usize = 512;
/// Largest relative superposition error accepted from a linear stage.
pub const SUPERPOSITION_TOLERANCE: f64 = 1e-6;

/// `10 log10(num / den)`, clamped to `[-DB_CAP, DB_CAP]`; `0 / 0` is 0 dB.
pub fn ratio_db(num: f64, den: f64) -> f64 {
    if num == 0.0 && den == 0.0 {
        return 0.0;
    }
    if den == 0.0 {
        return DB_CAP;
    }
    if num == 0.0 {
        return -DB_CAP;
    }
    (10.0 * (num / den).log10()).clamp(-DB_CAP, DB_CAP)
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Energy ratio of target to residual over all channels and samples, in dB.
pub fn osinr_db(target: &AudioBuffer, residual: &AudioBuffer) -> Result<f64> {
    target.check_same_shape(residual)?;
    let t: f64 = target.channels().iter().map(|c| energy(c)).sum();
    let r: f64 = residual.channels().iter().map(|c| energy(c)).sum();
    Ok(ratio_db(t, r))
}

/// Energy ratio of target to residual over all coefficients, in dB.
pub fn osinr_db_spectrogram(target: &Spectrogram, residual: &Spectrogram) -> Result<f64> {
    target.check_same_shape(residual)?;
    let t: f64 = target.power().iter().sum();
    let r: f64 = residual.power().iter().sum();
    Ok(ratio_db(t, r))
}

/// SINR at one microphone of the input scene.
pub fn input_sinr_db(
    target_image: &AudioBuffer,
    interference_image: &AudioBuffer,
    channel: usize,
) -> Result<f64> {
    target_image.check_same_shape(interference_image)?;
    if channel >= target_image.channel_count() {
        return Err(Error::InvalidParameter(format!("no channel {channel}")));
    }
    Ok(ratio_db(
        energy(target_image.channel(channel)),
        energy(interference_image.channel(channel)),
    ))
}

/// Best global offset between an estimate and a reference:
/// `estimate[n + lag]` lines up with `reference[n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub lag: isize,
    /// Squared normalized correlation over the overlap.
    pub correlation: f64,
}

fn overlap(len_est: usize, len_ref: usize, lag: isize) -> std::ops::Range<usize> {
    let start = (-lag).max(0) as usize;
    let end = (len_est as isize - lag).clamp(0, len_ref as isize) as usize;
    start..end.max(start)
}

/// Searches lags in `-max_lag..=max_lag` for the highest normalized
/// correlation. Ties go to the smallest `|lag|`.
pub fn align(estimate: &[f64], reference: &[f64], max_lag: usize) -> Result<Alignment> {
    if energy(reference) == 0.0 {
        return Err(Error::ZeroReference);
    }
    if estimate.len().abs_diff(reference.len()) > max_lag {
        return Err(Error::DimensionMismatch(format!(
            "lengths {} and {} differ by more than {max_lag} samples",
            estimate.len(),
            reference.len()
        )));
    }
    let r = cross_correlation(estimate, reference, max_lag);
    let prefix = |x: &[f64]| {
        let mut p = vec![0.0; x.len() + 1];
        for (i, v) in x.iter().enumerate() {
            p[i + 1] = p[i] + v * v;
        }
        p
    };
    let pe = prefix(estimate);
    let pr = prefix(reference);
    let mut best = Alignment {
        lag: 0,
        correlation: -1.0,
    };
    let lags = (0..=max_lag as isize).flat_map(|m| if m == 0 { vec![0] } else { vec![-m, m] });
    for lag in lags {
        let n = overlap(estimate.len(), reference.len(), lag);
        if n.is_empty() {
            continue;
        }
        let er = (pr[n.end] - pr[n.start]).max(0.0);
        let ee =
            (pe[(n.end as isize + lag) as usize] - pe[(n.start as isize + lag) as usize]).max(0.0);
        let c = r[(lag + max_lag as isize) as usize];
        let rho2 = if er > 0.0 && ee > 0.0 {
            c * c / (ee * er)
        } else {
            0.0
        };
        if rho2 > best.correlation {
            best = Alignment {
                lag,
                correlation: rho2,
            };
        }
    }
    Ok(best)
}

fn aligned_pair<'a>(
    estimate: &'a [f64],
    reference: &'a [f64],
    lag: isize,
) -> (&'a [f64], &'a [f64]) {
    let n = overlap(estimate.len(), reference.len(), lag);
    let e = &estimate[(n.start as isize + lag) as usize..(n.end as isize + lag) as usize];
    (e, &reference[n])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `10 log10(sum (g e - s)^2 / sum s^2)` after delay alignment and the
/// least-squares gain `g`, evaluated over the overlap of the aligned signals.
pub fn mse_db(estimate: &[f64], reference: &[f64], max_lag: usize) -> Result<f64> {
    let a = align(estimate, reference, max_lag)?;
    let (e, s) = aligned_pair(estimate, reference, a.lag);
    let ee = energy(e);
    let g = if ee > 0.0 { dot(e, s) / ee } else { 0.0 };
    let err: f64 = e.iter().zip(s).map(|(x, y)| (g * x - y).powi(2)).sum();
    Ok(ratio_db(err, energy(s)))
}

/// Output SINR of an estimate when only the clean target is known: the
/// aligned, least-squares scaled target is the signal part and everything
/// else the residual.
pub fn projection_osinr_db(estimate: &[f64], target: &[f64], max_lag: usize) -> Result<f64> {
    let a = align(estimate, target, max_lag)?;
    let (e, s) = aligned_pair(estimate, target, a.lag);
    let g = dot(e, s) / energy(s).max(f64::MIN_POSITIVE);
    let signal: f64 = s.iter().map(|y| (g * y).powi(2)).sum();
    let residual: f64 = e.iter().zip(s).map(|(x, y)| (x - g * y).powi(2)).sum();
    Ok(ratio_db(signal, residual))
}

/// A processing stage that is linear in its two-channel input once its
/// parameters are fixed.
pub trait LinearStage {
    fn process(&self, input: &AudioBuffer) -> Result<Spectrogram>;
}

fn two_channels(input: &AudioBuffer) -> Result<(AudioBuffer, AudioBuffer)> {
    if input.channel_count() != 2 {
        return Err(Error::InvalidBuffer("two channels required".into()));
    }
    Ok((input.extract(0), input.extract(1)))
}

/// STFT of a single microphone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceChannel {
    pub channel: usize,
    pub params: StftParams,
}

impl LinearStage for ReferenceChannel {
    fn process(&self, input: &AudioBuffer) -> Result<Spectrogram> {
        if self.channel >= input.channel_count() {
            return Err(Error::InvalidParameter(format!(
                "no channel {}",
                self.channel
            )));
        }
        stft(&input.extract(self.channel), self.params)
    }
}

/// MPDR beamformer with fixed weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenMpdr {
    pub weights: MpdrWeights,
    pub params: StftParams,
}

impl LinearStage for FrozenMpdr {
    fn process(&self, input: &AudioBuffer) -> Result<Spectrogram> {
        let (a, b) = two_channels(input)?;
        apply_mpdr(
            &stft(&a, self.params)?,
            &stft(&b, self.params)?,
            &self.weights,
        )
    }
}

/// Griffiths-Jim beamformer replaying the filters of an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenGjbf {
    pub trajectory: TapTrajectory,
    pub params: StftParams,
}

impl LinearStage for FrozenGjbf {
    fn process(&self, input: &AudioBuffer) -> Result<Spectrogram> {
        let (a, b) = two_channels(input)?;
        stft(&self.trajectory.replay(&a, &b)?, self.params)
    }
}

#[derive(Debug, Clone)]
pub struct LinearDecomposition {
    pub target: Spectrogram,
    pub residual: Spectrogram,
    /// `||target + residual - mixture|| / ||mixture||`.
    pub superposition_error: f64,
}

/// Runs `stage` on the target and residual images separately and checks the
/// parts add up to `mixture_output`, the stage's output on the mixture.
pub fn decompose_linear(
    stage: &dyn LinearStage,
    target_image: &AudioBuffer,
    residual_image: &AudioBuffer,
    mixture_output: &Spectrogram,
) -> Result<LinearDecomposition> {
    target_image.check_same_shape(residual_image)?;
    let target = stage.process(target_image)?;
    let residual = stage.process(residual_image)?;
    target.check_same_shape(mixture_output)?;
    let mut diff = 0.0;
    for ((t, r), m) in target
        .data()
        .iter()
        .zip(residual.data())
        .zip(mixture_output.data())
    {
        diff += (t + r - m).norm_sqr();
    }
    let scale: f64 = mixture_output.power().iter().sum();
    let superposition_error = if scale > 0.0 {
        (diff / scale).sqrt()
    } else {
        diff.sqrt()
    };
    if !(superposition_error <= SUPERPOSITION_TOLERANCE) {
        return Err(Error::NotLinear {
            residual: superposition_error,
        });
    }
    Ok(LinearDecomposition {
        target,
        residual,
        superposition_error,
    })
}

/// Applies post-filter gains computed on the mixture to each component.
pub fn shadow_gain_decompose(
    gains: &[f64],
    target: &Spectrogram,
    residual: &Spectrogram,
) -> Result<(Spectrogram, Spectrogram)> {
    target.check_same_shape(residual)?;
    if let Some(g) = gains.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::InvalidParameter(format!("gain {g} outside [0, 1]")));
    }
    Ok((target.apply_gains(gains)?, residual.apply_gains(gains)?))
}

/// Metrics after one stage of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: String,
    pub osinr_db: f64,
    pub mse_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub osinr_db: f64,
    pub input_sinr_db: f64,
    pub sinr_gain_db: f64,
    pub mse_db: f64,
    pub stages: Vec<StageReport>,
}

impl EvalReport {
    /// Report whose headline numbers are those of the last stage.
    pub fn new(input_sinr_db: f64, stages: Vec<StageReport>) -> Result<Self> {
        let last = stages
            .last()
            .ok_or_else(|| Error::InvalidParameter("report needs at least one stage".into()))?;
        Ok(Self {
            osinr_db: last.osinr_db,
            input_sinr_db,
            sinr_gain_db: last.osinr_db - input_sinr_db,
            mse_db: last.mse_db,
            stages,
        })
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec![
            "osinr_db".to_string(),
            "input_sinr_db".into(),
            "sinr_gain_db".into(),
            "mse_db".into(),
        ];
        for s in &self.stages {
            cols.push(format!("{}_osinr_db", s.stage));
            cols.push(format!("{}_mse_db", s.stage));
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut vals = vec![
            self.osinr_db,
            self.input_sinr_db,
            self.sinr_gain_db,
            self.mse_db,
        ];
        for s in &self.stages {
            vals.push(s.osinr_db);
            vals.push(s.mse_db);
        }
        vals.iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input SINR  {:>9.3} dB", self.input_sinr_db)?;
        writeln!(f, "output SINR {:>9.3} dB", self.osinr_db)?;
        writeln!(f, "SINR gain   {:>9.3} dB", self.sinr_gain_db)?;
        writeln!(f, "MSE         {:>9.3} dB", self.mse_db)?;
        for s in &self.stages {
            writeln!(
                f,
                "  {:<12} OSINR {:>9.3} dB  MSE {:>9.3} dB",
                s.stage, s.osinr_db, s.mse_db
            )?;
        }
        Ok(())
    }
}
