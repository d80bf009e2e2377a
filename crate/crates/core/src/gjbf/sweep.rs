use rayon::prelude::*;

use super::{fdaf_gjbf, GjbfConfig};
use crate::audio::AudioBuffer;
use crate::blockthresh::{residual_variance, VarianceMap};
use crate::error::{Error, Result};
use crate::stft::{stft, Spectrogram, StftParams};

/// Value reported where the residual variance is numerically zero.
pub const SINR_CAP: f64 = 1e6;
const VARIANCE_FLOOR: f64 = 1e-12;

/// Per-coefficient `(|Z|^2 - s2) / s2`, floored at zero, frame-major.
pub fn sinr_map(z: &Spectrogram, sigma2: &VarianceMap) -> Result<Vec<f64>> {
    sigma2.check_shape(z)?;
    let floor = VARIANCE_FLOOR * z.mean_power();
    Ok(z.data()
        .iter()
        .zip(sigma2.values())
        .map(|(c, &s2)| {
            if s2 < floor || s2 == 0.0 {
                SINR_CAP
            } else {
                ((c.norm_sqr() - s2) / s2).max(0.0)
            }
        })
        .collect())
}

/// Mean of `10 log10(1 + SINR)` over coefficients whose variance is above
/// the floor.
fn mean_sinr_db(z: &Spectrogram, sigma2: &VarianceMap) -> Result<f64> {
    let map = sinr_map(z, sigma2)?;
    let floor = VARIANCE_FLOOR * z.mean_power();
    let (sum, count) = map
        .iter()
        .zip(sigma2.values())
        .filter(|(_, &s2)| s2 >= floor && s2 > 0.0)
        .fold((0.0, 0usize), |(s, n), (v, _)| {
            (s + 10.0 * (1.0 + v).log10(), n + 1)
        });
    if count == 0 {
        return Ok(10.0 * (1.0 + SINR_CAP).log10());
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub length: usize,
    pub mean_sinr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best_length: usize,
    /// One point per successful candidate, in candidate order.
    pub curve: Vec<SweepPoint>,
    /// Candidates whose run failed.
    pub skipped: Vec<(usize, Error)>,
}

/// Runs the beamformer once per candidate length and keeps the length whose
/// output has the highest mean SINR. Ties go to the shorter filter.
///
/// The residual variance of each output is estimated from the two input
/// spectrograms exactly as the post-filter does. Candidates run in parallel.
pub fn select_filter_length(
    ch1: &AudioBuffer,
    ch2: &AudioBuffer,
    candidates: &[usize],
    template: &GjbfConfig,
    stft_params: StftParams,
) -> Result<SweepResult> {
    if candidates.len() < 2 {
        return Err(Error::InvalidParameter(
            "at least two candidate lengths".into(),
        ));
    }
    let y1 = stft(ch1, stft_params)?;
    let y2 = stft(ch2, stft_params)?;
    let outcomes: Vec<(usize, Result<f64>)> = candidates
        .par_iter()
        .map(|&length| {
            let config = GjbfConfig {
                filter_length: length,
                ..template.clone()
            };
            let score = fdaf_gjbf(ch1, ch2, &config).and_then(|out| {
                let z = stft(&out.z, stft_params)?;
                let sigma2 = residual_variance(&y1, &y2, &z)?;
                mean_sinr_db(&z, &sigma2)
            });
            (length, score)
        })
        .collect();

    let mut curve = Vec::new();
    let mut skipped = Vec::new();
    for (length, outcome) in outcomes {
        match outcome {
            Ok(mean_sinr_db) => curve.push(SweepPoint {
                length,
                mean_sinr_db,
            }),
            Err(e) => {
                log::warn!("filter length {length} skipped: {e}");
                skipped.push((length, e));
            }
        }
    }
    let best = curve
        .iter()
        .copied()
        .reduce(|best, p| {
            let better = p.mean_sinr_db > best.mean_sinr_db
                || (p.mean_sinr_db == best.mean_sinr_db && p.length < best.length);
            if better {
                p
            } else {
                best
            }
        })
        .ok_or(Error::AllCandidatesFailed(candidates.len()))?;
    Ok(SweepResult {
        best_length: best.length,
        curve,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::Spectrogram;
    use rustfft::num_complex::Complex64;

    fn spec_with_power(power: f64) -> Spectrogram {
        let mut s = Spectrogram::zeros(StftParams::default(), 16000, 3, 1024);
        s.data_mut()
            .iter_mut()
            .for_each(|c| *c = Complex64::new(power.sqrt(), 0.0));
        s
    }

    #[test]
    fn sinr_map_arithmetic() {
        let z = spec_with_power(2.0);
        let same = VarianceMap::filled(&z, 2.0);
        assert!(sinr_map(&z, &same)
            .unwrap()
            .iter()
            .all(|&v| v.abs() < 1e-12));
        let half = VarianceMap::filled(&z, 1.0);
        assert!(sinr_map(&z, &half)
            .unwrap()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-12));
        let zero = VarianceMap::filled(&z, 0.0);
        assert!(sinr_map(&z, &zero).unwrap().iter().all(|&v| v == SINR_CAP));
    }

    #[test]
    fn needs_two_candidates() {
        let x = AudioBuffer::mono(vec![0.0; 4000], 16000).unwrap();
        assert!(select_filter_length(
            &x,
            &x,
            &[100],
            &GjbfConfig::default(),
            StftParams::default()
        )
        .is_err());
    }
}
