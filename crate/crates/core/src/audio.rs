use crate::error::{Error, Result};

/// Multi-channel waveform at a fixed sample rate.
///
/// All channels share the same length. Amplitudes are nominally in `[-1, 1]`
/// but nothing here clips.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidBuffer("sample rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(Error::InvalidBuffer("at least one channel required".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidBuffer("channels differ in length".into()));
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn zeros(channel_count: usize, len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![vec![0.0; len]; channel_count.max(1)], sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channel_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Single-channel buffer holding a copy of channel `index`.
    pub fn extract(&self, index: usize) -> AudioBuffer {
        AudioBuffer {
            channels: vec![self.channels[index].clone()],
            sample_rate: self.sample_rate,
        }
    }

    /// Mean square over all samples of all channels.
    pub fn mean_power(&self) -> f64 {
        let n = self.len() * self.channel_count();
        if n == 0 {
            return 0.0;
        }
        self.channels.iter().flatten().map(|x| x * x).sum::<f64>() / n as f64
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn scale(&mut self, gain: f64) {
        self.channels.iter_mut().flatten().for_each(|x| *x *= gain);
    }

    /// Keeps the first `len` samples of every channel.
    pub fn truncate(&mut self, len: usize) {
        self.channels.iter_mut().for_each(|c| c.truncate(len));
    }

    /// Elementwise sum; both buffers must agree in shape and rate.
    pub fn add(&self, other: &AudioBuffer) -> Result<AudioBuffer> {
        self.check_same_shape(other)?;
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(AudioBuffer {
            channels,
            sample_rate: self.sample_rate,
        })
    }

    pub(crate) fn check_same_shape(&self, other: &AudioBuffer) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::SampleRateMismatch(
                self.sample_rate,
                other.sample_rate,
            ));
        }
        if self.channel_count() != other.channel_count() || self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.channel_count(),
                self.len(),
                other.channel_count(),
                other.len()
            )));
        }
        Ok(())
    }
}
