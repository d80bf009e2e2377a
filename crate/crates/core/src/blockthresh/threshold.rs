use rayon::prelude::*;

use super::partition::{enumerate_partitions, Region, Tiling};
use super::variance::VarianceMap;
use crate::error::{Error, Result};
use crate::stft::Spectrogram;

/// A-priori SNR assigned when a sub-block's mean variance is below the floor.
pub const ZETA_CAP: f64 = 1e6;
/// Variance floor relative to the global mean of `|Z|^2`.
const FLOOR_FRACTION: f64 = 1e-12;
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockThresholdParams {
    /// Frames per macro-block (P).
    pub macro_frames: usize,
    /// Bins per macro-block (Q).
    pub macro_bins: usize,
    /// Sub-blocks hold `2^h` cells.
    pub h: u32,
    /// Sub-blocks with a-priori SNR above this count as high-SNR.
    pub threshold: f64,
}

impl Default for BlockThresholdParams {
    fn default() -> Self {
        Self {
            macro_frames: 8,
            macro_bins: 16,
            h: 4,
            threshold: 1.0,
        }
    }
}

impl BlockThresholdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) {
            return Err(Error::InvalidParameter("threshold must be >= 0".into()));
        }
        enumerate_partitions(self.macro_frames, self.macro_bins, self.h).map(|_| ())
    }
}

/// `a = (1 - 1 / (zeta + 1))+`
pub fn attenuation_factor(zeta: f64) -> f64 {
    (1.0 - 1.0 / (zeta + 1.0)).max(0.0)
}

/// Estimated a-priori SNR `max(mean|Z|^2 / mean s2 - 1, 0)` of every
/// sub-block of `tiling` placed at `region`'s corner.
pub fn block_snr(
    z: &Spectrogram,
    sigma2: &VarianceMap,
    region: Region,
    tiling: &Tiling,
    floor: f64,
) -> Vec<f64> {
    tiling
        .sub_blocks(region.frame0, region.bin0)
        .map(|sub| {
            let mut zsum = 0.0;
            let mut ssum = 0.0;
            for f in sub.frame0..sub.frame0 + sub.frames {
                for b in sub.bin0..sub.bin0 + sub.bins {
                    zsum += z.get(b, f).norm_sqr();
                    ssum += sigma2.get(b, f);
                }
            }
            let n = sub.cells() as f64;
            let (zbar, sbar) = (zsum / n, ssum / n);
            if sbar <= floor {
                ZETA_CAP
            } else {
                (zbar / sbar - 1.0).max(0.0)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionChoice {
    pub tiling: Tiling,
    pub zetas: Vec<f64>,
    pub attenuations: Vec<f64>,
}

/// Picks the split whose above-threshold sub-blocks have the highest mean
/// a-priori SNR. Ties go to more above-threshold sub-blocks, then to the
/// smaller `v`. A macro-block with nothing above threshold keeps the first
/// tiling.
pub fn choose_partition(
    z: &Spectrogram,
    sigma2: &VarianceMap,
    region: Region,
    tilings: &[Tiling],
    threshold: f64,
    floor: f64,
) -> PartitionChoice {
    let mut best: Option<(f64, usize, Tiling, Vec<f64>)> = None;
    for tiling in tilings {
        let zetas = block_snr(z, sigma2, region, tiling, floor);
        let above: Vec<f64> = zetas.iter().copied().filter(|&q| q > threshold).collect();
        let score = if above.is_empty() {
            0.0
        } else {
            above.iter().sum::<f64>() / above.len() as f64
        };
        let wins = match &best {
            None => true,
            Some((s, count, _, _)) => {
                if nearly_equal(score, *s) {
                    above.len() > *count
                } else {
                    score > *s
                }
            }
        };
        if wins {
            best = Some((score, above.len(), *tiling, zetas));
        }
    }
    let (_, _, tiling, zetas) = best.expect("at least one tiling");
    let attenuations = zetas.iter().map(|&q| attenuation_factor(q)).collect();
    PartitionChoice {
        tiling,
        zetas,
        attenuations,
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroBlockChoice {
    pub region: Region,
    /// Cell budget exponent actually used; below `h` only at the borders.
    pub h_used: u32,
    pub choice: PartitionChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    pub params: BlockThresholdParams,
    pub macro_blocks: Vec<MacroBlockChoice>,
}

#[derive(Debug, Clone)]
pub struct BlockThresholdOutput {
    pub output: Spectrogram,
    /// Gain applied to every coefficient, frame-major.
    pub gains: Vec<f64>,
    pub grid: BlockGrid,
}

/// `S(f, v) = a(f, v) Z(f, v)` with `a` constant on the chosen sub-blocks.
///
/// Macro-blocks cut off by the spectrogram border use the largest cell budget
/// that still tiles them; a budget of one cell means per-coefficient gains.
pub fn apply_block_threshold(
    z: &Spectrogram,
    sigma2: &VarianceMap,
    params: &BlockThresholdParams,
) -> Result<BlockThresholdOutput> {
    params.validate()?;
    sigma2.check_shape(z)?;
    let floor = FLOOR_FRACTION * z.mean_power();
    let mut regions = Vec::new();
    for frame0 in (0..z.frames()).step_by(params.macro_frames) {
        for bin0 in (0..z.bins()).step_by(params.macro_bins) {
            let frames = params.macro_frames.min(z.frames() - frame0);
            let bins = params.macro_bins.min(z.bins() - bin0);
            regions.push(Region::new(frame0, bin0, frames, bins));
        }
    }
    let macro_blocks: Vec<MacroBlockChoice> = regions
        .into_par_iter()
        .map(|region| {
            let (h_used, tilings) = (0..=params.h)
                .rev()
                .find_map(|h| {
                    enumerate_partitions(region.frames, region.bins, h)
                        .ok()
                        .map(|t| (h, t))
                })
                .expect("a one-cell budget always tiles");
            let choice = choose_partition(z, sigma2, region, &tilings, params.threshold, floor);
            MacroBlockChoice {
                region,
                h_used,
                choice,
            }
        })
        .collect();

    let bins = z.bins();
    let mut gains = vec![1.0; z.data().len()];
    for mb in &macro_blocks {
        let subs = mb
            .choice
            .tiling
            .sub_blocks(mb.region.frame0, mb.region.bin0);
        for (sub, &a) in subs.zip(&mb.choice.attenuations) {
            for f in sub.frame0..sub.frame0 + sub.frames {
                for b in sub.bin0..sub.bin0 + sub.bins {
                    gains[f * bins + b] = a;
                }
            }
        }
    }
    let output = z.apply_gains(&gains)?;
    Ok(BlockThresholdOutput {
        output,
        gains,
        grid: BlockGrid {
            params: *params,
            macro_blocks,
        },
    })
}
