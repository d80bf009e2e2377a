//! The complete zoom chain: beamformer, optional block-thresholding
//! post-filter and resynthesis, plus its evaluation on simulated scenes.

use std::fmt;
use std::str::FromStr;

use crate::audio::AudioBuffer;
use crate::blockthresh::{
    apply_block_threshold, residual_variance, BlockGrid, BlockThresholdParams, VarianceMap,
};
use crate::error::{Error, Result};
use crate::gjbf::{fdaf_gjbf, select_filter_length, GjbfConfig, SweepResult};
use crate::metrics::{
    decompose_linear, input_sinr_db, mse_db, osinr_db, shadow_gain_decompose, EvalReport,
    FrozenGjbf, FrozenMpdr, LinearStage, StageReport, DEFAULT_MAX_LAG,
};
use crate::mpdr::{apply_mpdr, broadside_steering, estimate_covariance, Loading, MpdrWeights};
use crate::stft::{istft, stft, Spectrogram, StftParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beamformer {
    Mpdr,
    Gjbf,
}

impl FromStr for Beamformer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mpdr" => Ok(Self::Mpdr),
            "gjbf" => Ok(Self::Gjbf),
            other => Err(Error::InvalidParameter(format!(
                "unknown beamformer '{other}'"
            ))),
        }
    }
}

impl fmt::Display for Beamformer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mpdr => "mpdr",
            Self::Gjbf => "gjbf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub beamformer: Beamformer,
    pub stft: StftParams,
    pub mpdr_loading: Loading,
    pub gjbf: GjbfConfig,
    /// When set, the GJBF filter length is picked from these candidates.
    pub gjbf_sweep: Option<Vec<usize>>,
    pub block_threshold: BlockThresholdParams,
    pub bt_enabled: bool,
    /// Seed of any simulated input; processing itself is deterministic.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            beamformer: Beamformer::Mpdr,
            stft: StftParams::default(),
            mpdr_loading: Loading::default(),
            gjbf: GjbfConfig::default(),
            gjbf_sweep: None,
            block_threshold: BlockThresholdParams::default(),
            bt_enabled: true,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.stft.cola_gain()?;
        match self.mpdr_loading {
            Loading::Absolute(a) | Loading::TraceRelative(a) if !(a >= 0.0) => {
                return Err(Error::InvalidParameter("loading must be >= 0".into()));
            }
            _ => {}
        }
        self.gjbf.validate()?;
        if let Some(list) = &self.gjbf_sweep {
            if list.len() < 2 {
                return Err(Error::InvalidParameter(
                    "at least two candidate lengths".into(),
                ));
            }
        }
        if self.bt_enabled {
            self.block_threshold.validate()?;
        }
        Ok(())
    }
}

/// The beamformer of a run with its parameters fixed, for re-running on
/// component images.
#[derive(Debug, Clone, PartialEq)]
pub enum FrozenBeamformer {
    Mpdr(FrozenMpdr),
    Gjbf(FrozenGjbf),
}

impl FrozenBeamformer {
    pub fn stage(&self) -> &dyn LinearStage {
        match self {
            Self::Mpdr(s) => s,
            Self::Gjbf(s) => s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZoomOutput {
    /// Enhanced signal at the input rate and length.
    pub output: AudioBuffer,
    /// Beamformer output alone, at the input rate and length.
    pub beamformed: AudioBuffer,
    /// Microphone spectrograms.
    pub inputs: [Spectrogram; 2],
    /// Beamformer output spectrogram `Z`.
    pub z: Spectrogram,
    /// Post-filter output spectrogram, when the post-filter ran.
    pub s: Option<Spectrogram>,
    pub sigma2: Option<VarianceMap>,
    /// Post-filter gain per coefficient, frame-major.
    pub gains: Option<Vec<f64>>,
    pub grid: Option<BlockGrid>,
    pub frozen: FrozenBeamformer,
    /// GJBF filter length actually used.
    pub gjbf_length: Option<usize>,
    pub sweep: Option<SweepResult>,
}

/// Zero padding that makes every input sample lie where analysis and
/// synthesis windows overlap-add to a constant.
fn pad(x: &AudioBuffer, params: StftParams) -> AudioBuffer {
    let lead = params.frame_length() - params.hop_length();
    let channels = x
        .channels()
        .iter()
        .map(|c| {
            let mut v = vec![0.0; lead];
            v.extend_from_slice(c);
            v.resize(lead + c.len() + params.frame_length(), 0.0);
            v
        })
        .collect();
    AudioBuffer::new(channels, x.sample_rate()).expect("padding keeps channels equal")
}

fn unpad(x: &AudioBuffer, params: StftParams, len: usize) -> AudioBuffer {
    let lead = params.frame_length() - params.hop_length();
    let channels = x
        .channels()
        .iter()
        .map(|c| c[lead..lead + len].to_vec())
        .collect();
    AudioBuffer::new(channels, x.sample_rate()).expect("trimming keeps channels equal")
}

fn synthesize(spec: &Spectrogram, params: StftParams, len: usize) -> Result<AudioBuffer> {
    Ok(unpad(&istft(spec)?, params, len))
}

/// Runs the configured chain on a two-channel recording.
pub fn run_zoom(input: &AudioBuffer, config: &PipelineConfig) -> Result<ZoomOutput> {
    if input.channel_count() != 2 {
        return Err(Error::InvalidBuffer("two channels required".into()));
    }
    config.validate()?;
    let params = config.stft;
    let len = input.len();
    let padded = pad(input, params);
    let (x1, x2) = (padded.extract(0), padded.extract(1));
    let y1 = stft(&x1, params)?;
    let y2 = stft(&x2, params)?;

    let (z, beamformed, frozen, gjbf_length, sweep) = match config.beamformer {
        Beamformer::Mpdr => {
            let covs = estimate_covariance(&y1, &y2)?;
            let weights =
                MpdrWeights::design(&covs, &broadside_steering(y1.bins()), config.mpdr_loading)?;
            let z = apply_mpdr(&y1, &y2, &weights)?;
            let beamformed = synthesize(&z, params, len)?;
            let frozen = FrozenBeamformer::Mpdr(FrozenMpdr { weights, params });
            (z, beamformed, frozen, None, None)
        }
        Beamformer::Gjbf => {
            let mut gjbf = config.gjbf.clone();
            let sweep = match &config.gjbf_sweep {
                Some(candidates) => {
                    let result = select_filter_length(&x1, &x2, candidates, &gjbf, params)?;
                    gjbf.filter_length = result.best_length;
                    Some(result)
                }
                None => None,
            };
            let out = fdaf_gjbf(&x1, &x2, &gjbf)?;
            let z = stft(&out.z, params)?;
            let beamformed = unpad(&out.z, params, len);
            let frozen = FrozenBeamformer::Gjbf(FrozenGjbf {
                trajectory: out.trajectory,
                params,
            });
            (z, beamformed, frozen, Some(gjbf.filter_length), sweep)
        }
    };

    let (output, s, sigma2, gains, grid) = if config.bt_enabled {
        let sigma2 = residual_variance(&y1, &y2, &z)?;
        let bt = apply_block_threshold(&z, &sigma2, &config.block_threshold)?;
        let output = synthesize(&bt.output, params, len)?;
        (
            output,
            Some(bt.output),
            Some(sigma2),
            Some(bt.gains),
            Some(bt.grid),
        )
    } else {
        (beamformed.clone(), None, None, None, None)
    };

    Ok(ZoomOutput {
        output,
        beamformed,
        inputs: [y1, y2],
        z,
        s,
        sigma2,
        gains,
        grid,
        frozen,
        gjbf_length,
        sweep,
    })
}

/// Output SINR and MSE of a run against the images it was made from.
///
/// The beamformer is re-run with frozen parameters on the target image and
/// on the interference-plus-noise image; the post-filter gains are applied
/// to both parts. SINR is measured on the resynthesized parts, MSE on the
/// actual output against the target image at the first microphone.
pub fn evaluate(
    zoom: &ZoomOutput,
    target_image: &AudioBuffer,
    interference_image: &AudioBuffer,
) -> Result<EvalReport> {
    target_image.check_same_shape(interference_image)?;
    let params = zoom.z.params();
    let len = target_image.len();
    if zoom.output.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "output has {} samples, images {len}",
            zoom.output.len()
        )));
    }
    let parts = decompose_linear(
        zoom.frozen.stage(),
        &pad(target_image, params),
        &pad(interference_image, params),
        &zoom.z,
    )?;
    let reference = target_image.channel(0);

    let mut stages = vec![StageReport {
        stage: "beamformer".into(),
        osinr_db: osinr_db(
            &synthesize(&parts.target, params, len)?,
            &synthesize(&parts.residual, params, len)?,
        )?,
        mse_db: mse_db(zoom.beamformed.channel(0), reference, DEFAULT_MAX_LAG)?,
    }];
    if let Some(gains) = &zoom.gains {
        let (t, r) = shadow_gain_decompose(gains, &parts.target, &parts.residual)?;
        stages.push(StageReport {
            stage: "postfilter".into(),
            osinr_db: osinr_db(&synthesize(&t, params, len)?, &synthesize(&r, params, len)?)?,
            mse_db: mse_db(zoom.output.channel(0), reference, DEFAULT_MAX_LAG)?,
        });
    }
    EvalReport::new(input_sinr_db(target_image, interference_image, 0)?, stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::default_scene;

    #[test]
    fn mono_input_is_rejected() {
        let x = AudioBuffer::mono(vec![0.0; 4000], 16000).unwrap();
        assert_eq!(
            run_zoom(&x, &PipelineConfig::default()).unwrap_err(),
            Error::InvalidBuffer("two channels required".into())
        );
    }

    #[test]
    fn identical_channels_gjbf_pass_through() {
        let (scene, _) = default_scene(3, 1.0, 16000).unwrap();
        let c1 = scene.mixture.channel(0).to_vec();
        let x = AudioBuffer::new(vec![c1.clone(), c1.clone()], 16000).unwrap();
        let config = PipelineConfig {
            beamformer: Beamformer::Gjbf,
            bt_enabled: false,
            ..Default::default()
        };
        let out = run_zoom(&x, &config).unwrap();
        for (a, b) in out.output.channel(0).iter().zip(&c1) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn mpdr_output_keeps_length_and_rate() {
        let (scene, _) = default_scene(4, 0.5, 16000).unwrap();
        let out = run_zoom(&scene.mixture, &PipelineConfig::default()).unwrap();
        assert_eq!(out.output.len(), scene.mixture.len());
        assert_eq!(out.output.sample_rate(), 16000);
        assert_eq!(out.output.channel_count(), 1);
        assert!(out.gains.is_some() && out.grid.is_some());
    }

    #[test]
    fn post_filter_never_adds_energy() {
        let (scene, _) = default_scene(5, 1.0, 16000).unwrap();
        for beamformer in [Beamformer::Mpdr, Beamformer::Gjbf] {
            let on = PipelineConfig {
                beamformer,
                ..Default::default()
            };
            let off = PipelineConfig {
                bt_enabled: false,
                ..on.clone()
            };
            let a = run_zoom(&scene.mixture, &on).unwrap();
            let b = run_zoom(&scene.mixture, &off).unwrap();
            let ea: f64 = a.s.unwrap().power().iter().sum();
            let eb: f64 = b.z.power().iter().sum();
            assert!(ea <= eb);
        }
    }

    #[test]
    fn evaluation_of_default_scene() {
        let (scene, _) = default_scene(6, 2.0, 16000).unwrap();
        let out = run_zoom(&scene.mixture, &PipelineConfig::default()).unwrap();
        let report = evaluate(&out, &scene.target_image, &scene.interference_image()).unwrap();
        assert!(report.sinr_gain_db > 0.0, "{report}");
        assert_eq!(report.stages.len(), 2);
    }

    #[test]
    fn beamformer_names_parse() {
        assert_eq!("MPDR".parse::<Beamformer>().unwrap(), Beamformer::Mpdr);
        assert_eq!("gjbf".parse::<Beamformer>().unwrap(), Beamformer::Gjbf);
        assert!("mvdr".parse::<Beamformer>().is_err());
        assert_eq!(Beamformer::Gjbf.to_string(), "gjbf");
    }
}
