use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Deterministic speech-like test signal.
///
/// A sequence of syllables separated by short pauses. Voiced syllables are a
/// glottal pulse train with drifting pitch shaped by three formant
/// resonators; unvoiced ones are high-passed noise bursts. Peak amplitude is
/// 0.5.
pub fn synthetic_speech(seed: u64, duration_s: f64, sample_rate: u32) -> Result<AudioBuffer> {
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParameter("duration must be positive".into()));
    }
    let fs = sample_rate as f64;
    let len = (duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_pitch = 90.0 + 130.0 * rng.random::<f64>();
    let mut out = vec![0.0; len];
    let mut pos = (rng.random::<f64>() * 0.05 * fs) as usize;
    let mut phase = 0.0;
    let mut glottal = 0.0;

    while pos < len {
        let syl_len = ((0.12 + 0.18 * rng.random::<f64>()) * fs) as usize;
        let voiced = rng.random::<f64>() < 0.75;
        let level = 0.4 + 0.6 * rng.random::<f64>();
        let formants = [
            (300.0 + 500.0 * rng.random::<f64>(), 80.0),
            (900.0 + 1400.0 * rng.random::<f64>(), 100.0),
            (2400.0 + 600.0 * rng.random::<f64>(), 140.0),
        ];
        let mut bank: Vec<Resonator> = formants
            .iter()
            .filter(|(f, _)| *f < 0.45 * fs)
            .map(|&(f, bw)| Resonator::new(f, bw, fs))
            .collect();
        let mut hiss = Resonator::new((4500.0f64).min(0.4 * fs), 2000.0, fs);
        let pitch_slope = (rng.random::<f64>() - 0.5) * 0.6;

        for i in 0..syl_len {
            let n = pos + i;
            if n >= len {
                break;
            }
            let t = i as f64 / syl_len as f64;
            let envelope = (PI * t).sin().powi(2) * level;
            let sample = if voiced {
                let f0 = base_pitch * (1.0 + pitch_slope * (t - 0.5));
                phase += f0 / fs;
                let pulse = if phase >= 1.0 {
                    phase -= 1.0;
                    1.0
                } else {
                    0.0
                };
                // one-pole tilt for the glottal spectrum
                glottal = 0.9 * glottal + pulse;
                bank.iter_mut().map(|r| r.step(glottal)).sum::<f64>()
            } else {
                hiss.step(rng.sample::<f64, _>(StandardNormal))
            };
            out[n] = envelope * sample;
        }
        let pause = ((0.03 + 0.12 * rng.random::<f64>()) * fs) as usize;
        pos += syl_len + pause;
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= 0.5 / peak);
    }
    AudioBuffer::mono(out, sample_rate)
}

/// Two-pole resonator with unity gain near its centre frequency.
struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, fs: f64) -> Self {
        let r = (-PI * bandwidth / fs).exp();
        let theta = 2.0 * PI * freq / fs;
        Self {
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            gain: 1.0 - r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}
