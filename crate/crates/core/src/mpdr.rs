//! Two-channel MPDR (Capon) beamformer with diagonal loading.
//!
//! Each frequency bin gets its own 2x2 sample covariance over the whole
//! utterance and its own weight vector
//! `w = (R + aI)^-1 d / (d^H (R + aI)^-1 d)`, which minimizes output power
//! while passing the look direction `d` with unit gain. The 2x2 inverse is
//! taken in closed form.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::simulate::{steering_vector, ArrayGeometry};
use crate::stft::Spectrogram;

pub type Vector2 = [Complex64; 2];

/// Relative loading used when none is given: `alpha = 1e-2 * trace(R) / 2`.
pub const DEFAULT_RELATIVE_LOADING: f64 = 1e-2;

// |det| below this fraction of trace^2 counts as singular
const SINGULAR_RCOND: f64 = 1e-14;

/// Sample covariance `R = (1/K) sum_k y_k y_k^H` of one frequency bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinCovariance {
    pub matrix: [[Complex64; 2]; 2],
    pub bin: usize,
    pub frames: usize,
}

impl BinCovariance {
    pub fn trace(&self) -> f64 {
        self.matrix[0][0].re + self.matrix[1][1].re
    }

    /// Eigenvalues of the Hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.matrix[0][0].re;
        let d = self.matrix[1][1].re;
        let b = self.matrix[0][1].norm();
        let mid = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mid - disc, mid + disc]
    }

    /// `x^H R x`
    pub fn quadratic_form(&self, x: &Vector2) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += x[i].conj() * self.matrix[i][j] * x[j];
            }
        }
        acc.re
    }
}

/// Loading rule for [`MpdrWeights::design`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loading {
    /// The same `alpha` for every bin.
    Absolute(f64),
    /// `alpha = factor * trace(R) / 2`, per bin.
    TraceRelative(f64),
}

impl Default for Loading {
    fn default() -> Self {
        Loading::TraceRelative(DEFAULT_RELATIVE_LOADING)
    }
}

impl Loading {
    fn alpha(&self, cov: &BinCovariance) -> f64 {
        match *self {
            Loading::Absolute(a) => a,
            Loading::TraceRelative(f) => f * cov.trace() / 2.0,
        }
    }
}

/// Per-bin covariance of a two-channel STFT.
pub fn estimate_covariance(ch1: &Spectrogram, ch2: &Spectrogram) -> Result<Vec<BinCovariance>> {
    ch1.check_same_shape(ch2)?;
    let frames = ch1.frames();
    if frames == 0 {
        return Err(Error::NoFrames);
    }
    let k = frames as f64;
    Ok((0..ch1.bins())
        .map(|bin| {
            let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
            for v in 0..frames {
                let y = [ch1.get(bin, v), ch2.get(bin, v)];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += y[i] * y[j].conj();
                    }
                }
            }
            for row in &mut m {
                for c in row.iter_mut() {
                    *c /= k;
                }
            }
            // exact Hermitian symmetry
            m[0][0].im = 0.0;
            m[1][1].im = 0.0;
            m[1][0] = m[0][1].conj();
            BinCovariance {
                matrix: m,
                bin,
                frames,
            }
        })
        .collect())
}

/// Diagonally loaded MPDR weights for one bin; `w^H d = 1`.
pub fn mpdr_weights(cov: &BinCovariance, steering: &Vector2, alpha: f64) -> Result<Vector2> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "loading {alpha} must be >= 0"
        )));
    }
    let a = cov.matrix[0][0] + alpha;
    let b = cov.matrix[0][1];
    let c = cov.matrix[1][0];
    let d = cov.matrix[1][1] + alpha;
    let det = a * d - b * c;
    let scale = (a.re.abs() + d.re.abs()).powi(2);
    if !(det.norm() > SINGULAR_RCOND * scale) || !det.norm().is_finite() {
        return Err(Error::DegenerateCovariance { bin: cov.bin });
    }
    // adj(A) d; the 1/det factor cancels in the normalization
    let num = [
        d * steering[0] - b * steering[1],
        a * steering[1] - c * steering[0],
    ];
    let num = [num[0] / det, num[1] / det];
    let denom = steering[0].conj() * num[0] + steering[1].conj() * num[1];
    if !(denom.re > 0.0) {
        return Err(Error::DegenerateCovariance { bin: cov.bin });
    }
    Ok([num[0] / denom.re, num[1] / denom.re])
}

/// Weights for every bin of a spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct MpdrWeights {
    pub weights: Vec<Vector2>,
    pub steering: Vec<Vector2>,
    /// Loading actually used in each bin.
    pub alphas: Vec<f64>,
}

impl MpdrWeights {
    /// Designs weights bin by bin. A bin whose covariance is exactly zero gets
    /// the matched filter `d / |d|^2`, the limit of any positive loading.
    pub fn design(covs: &[BinCovariance], steering: &[Vector2], loading: Loading) -> Result<Self> {
        if covs.len() != steering.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariances, {} steering vectors",
                covs.len(),
                steering.len()
            )));
        }
        let solved: Vec<(Vector2, f64)> = covs
            .par_iter()
            .zip(steering.par_iter())
            .map(|(cov, d)| {
                let mut alpha = loading.alpha(cov);
                if cov.trace() == 0.0 && alpha == 0.0 {
                    alpha = 1.0;
                }
                mpdr_weights(cov, d, alpha).map(|w| (w, alpha))
            })
            .collect::<Result<_>>()?;
        let (weights, alphas) = solved.into_iter().unzip();
        Ok(Self {
            weights,
            steering: steering.to_vec(),
            alphas,
        })
    }

    /// `w^H d` per bin; one when distortionless.
    pub fn response(&self) -> Vec<Complex64> {
        self.weights
            .iter()
            .zip(&self.steering)
            .map(|(w, d)| w[0].conj() * d[0] + w[1].conj() * d[1])
            .collect()
    }
}

/// `[1, 1]` for every bin: the look direction for a broadside target.
pub fn broadside_steering(bins: usize) -> Vec<Vector2> {
    vec![[Complex64::new(1.0, 0.0); 2]; bins]
}

/// Steering vectors towards `azimuth_deg` at the centre frequency of each
/// bin of `template`.
pub fn steering_for(
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    template: &Spectrogram,
) -> Result<Vec<Vector2>> {
    if geometry.mic_count() != 2 {
        return Err(Error::InvalidParameter(
            "MPDR needs exactly two microphones".into(),
        ));
    }
    let params = template.params();
    Ok((0..template.bins())
        .map(|k| {
            let f = params.bin_frequency(k, template.sample_rate());
            let d = steering_vector(geometry, azimuth_deg, f);
            [d[0], d[1]]
        })
        .collect())
}

/// `Z(f, v) = w(f)^H [Y1(f, v), Y2(f, v)]`
pub fn apply_mpdr(
    ch1: &Spectrogram,
    ch2: &Spectrogram,
    weights: &MpdrWeights,
) -> Result<Spectrogram> {
    ch1.check_same_shape(ch2)?;
    if weights.weights.len() != ch1.bins() {
        return Err(Error::DimensionMismatch(format!(
            "{} weight vectors for {} bins",
            weights.weights.len(),
            ch1.bins()
        )));
    }
    let mut out = ch1.clone();
    for v in 0..ch1.frames() {
        let (y1, y2) = (ch1.frame(v), ch2.frame(v));
        for (k, z) in out.frame_mut(v).iter_mut().enumerate() {
            let w = &weights.weights[k];
            *z = w[0].conj() * y1[k] + w[1].conj() * y2[k];
        }
    }
    Ok(out)
}
