use crate::error::{Error, Result};
use crate::stft::Spectrogram;

/// Nonnegative per-coefficient variance, frame-major like [`Spectrogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMap {
    bins: usize,
    frames: usize,
    values: Vec<f64>,
}

impl VarianceMap {
    pub fn new(bins: usize, frames: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != bins * frames {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {bins}x{frames}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("variances must be >= 0".into()));
        }
        Ok(Self {
            bins,
            frames,
            values,
        })
    }

    /// Constant map shaped like `template`.
    pub fn filled(template: &Spectrogram, value: f64) -> Self {
        Self {
            bins: template.bins(),
            frames: template.frames(),
            values: vec![value.max(0.0); template.bins() * template.frames()],
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.values[frame * self.bins + bin]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn check_shape(&self, spec: &Spectrogram) -> Result<()> {
        if self.bins != spec.bins() || self.frames != spec.frames() {
            return Err(Error::DimensionMismatch(format!(
                "variance map {}x{} vs spectrogram {}x{}",
                self.bins,
                self.frames,
                spec.bins(),
                spec.frames()
            )));
        }
        Ok(())
    }
}

/// `s2(f, v) = (|Y1 - Z|^2 + |Y2 - Z|^2) / 2`
pub fn residual_variance(
    y1: &Spectrogram,
    y2: &Spectrogram,
    z: &Spectrogram,
) -> Result<VarianceMap> {
    y1.check_same_shape(y2)?;
    y1.check_same_shape(z)?;
    let values = y1
        .data()
        .iter()
        .zip(y2.data())
        .zip(z.data())
        .map(|((a, b), z)| 0.5 * ((a - z).norm_sqr() + (b - z).norm_sqr()))
        .collect();
    Ok(VarianceMap {
        bins: z.bins(),
        frames: z.frames(),
        values,
    })
}
