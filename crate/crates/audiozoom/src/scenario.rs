//! Scene description files for `audiozoom simulate`.
//!
//! One `key=value` per line, `#` starts a comment:
//!
//! ```text
//! target=speech/alice.wav,90
//! interferer=synth:7,60
//! sir_db=0
//! seed=3
//! echo_t60_ms=100
//! noise_snr_db=40
//! spacing_m=0.1
//! ```
//!
//! A source is either a WAV path (relative to the scenario file) or
//! `synth:SEED` for built-in synthetic speech of `duration_s` seconds at
//! `sample_rate`.

use std::path::{Path, PathBuf};

use audiozoom_core::simulate::{
    echo_taps_for_t60, synthesize_mixture, synthetic_speech, ArrayGeometry, Mixture, MixtureSpec,
    SourceSpec, DEFAULT_INTERFERER_AZIMUTH, DEFAULT_SENSOR_SNR_DB, DEFAULT_SPACING_M,
};
use audiozoom_core::AudioBuffer;

use crate::error::{CliError, Result};
use crate::wav::read_wav;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceRef {
    File(PathBuf),
    Synthetic(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceEntry {
    pub source: SourceRef,
    pub azimuth_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub target: SourceEntry,
    pub interferers: Vec<SourceEntry>,
    pub sir_db: f64,
    pub seed: u64,
    /// Zero means anechoic.
    pub echo_t60_ms: f64,
    pub noise_snr_db: Option<f64>,
    pub spacing_m: f64,
    pub duration_s: f64,
    pub sample_rate: u32,
}

impl Default for Scenario {
    /// Broadside target, one interferer at 60 degrees, 0 dB SIR, 10 cm.
    fn default() -> Self {
        Self {
            target: SourceEntry {
                source: SourceRef::Synthetic(0),
                azimuth_deg: 90.0,
            },
            interferers: vec![SourceEntry {
                source: SourceRef::Synthetic(1),
                azimuth_deg: DEFAULT_INTERFERER_AZIMUTH,
            }],
            sir_db: 0.0,
            seed: 0,
            echo_t60_ms: 0.0,
            noise_snr_db: Some(DEFAULT_SENSOR_SNR_DB),
            spacing_m: DEFAULT_SPACING_M,
            duration_s: 3.0,
            sample_rate: 16000,
        }
    }
}

fn parse_source(value: &str, base: &Path) -> std::result::Result<SourceEntry, String> {
    let (src, az) = value
        .rsplit_once(',')
        .ok_or_else(|| format!("expected SOURCE,AZIMUTH, got '{value}'"))?;
    let azimuth_deg: f64 = az
        .trim()
        .parse()
        .map_err(|_| format!("bad azimuth '{}'", az.trim()))?;
    if !(0.0..=180.0).contains(&azimuth_deg) {
        return Err(format!("azimuth {azimuth_deg} outside [0, 180]"));
    }
    let src = src.trim();
    let source = match src.strip_prefix("synth:") {
        Some(seed) => SourceRef::Synthetic(
            seed.trim()
                .parse()
                .map_err(|_| format!("bad synthetic seed '{seed}'"))?,
        ),
        None if src.is_empty() => return Err("empty source".into()),
        None => SourceRef::File(base.join(src)),
    };
    Ok(SourceEntry {
        source,
        azimuth_deg,
    })
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value '{value}' for {key}"))
}

impl Scenario {
    /// Parses scenario text; `path` is used for messages and to resolve
    /// relative source paths.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut scenario = Scenario {
            interferers: Vec::new(),
            ..Default::default()
        };
        let mut target = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |message: String| CliError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let applied = match key {
                "target" => parse_source(value, base).map(|s| {
                    target = Some(s);
                }),
                "interferer" => parse_source(value, base).map(|s| scenario.interferers.push(s)),
                "sir_db" => parse_number(key, value).map(|v| scenario.sir_db = v),
                "seed" => parse_number(key, value).map(|v| scenario.seed = v),
                "echo_t60_ms" => parse_number(key, value).map(|v| scenario.echo_t60_ms = v),
                "noise_snr_db" if value == "none" => {
                    scenario.noise_snr_db = None;
                    Ok(())
                }
                "noise_snr_db" => parse_number(key, value).map(|v| scenario.noise_snr_db = Some(v)),
                "spacing_m" => parse_number(key, value).map(|v| scenario.spacing_m = v),
                "duration_s" => parse_number(key, value).map(|v| scenario.duration_s = v),
                "sample_rate" => parse_number(key, value).map(|v| scenario.sample_rate = v),
                other => Err(format!("unknown key '{other}'")),
            };
            applied.map_err(fail)?;
        }
        scenario.target = target.ok_or_else(|| CliError::Parse {
            path: path.to_path_buf(),
            line: text.lines().count().max(1),
            message: "no target given".into(),
        })?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    fn load_source(&self, entry: &SourceEntry) -> Result<AudioBuffer> {
        match &entry.source {
            SourceRef::Synthetic(seed) => {
                Ok(synthetic_speech(*seed, self.duration_s, self.sample_rate)?)
            }
            SourceRef::File(path) => {
                let audio = read_wav(path)?;
                if audio.channel_count() != 1 {
                    return Err(CliError::Data(format!(
                        "{}: source must be mono, has {} channels",
                        path.display(),
                        audio.channel_count()
                    )));
                }
                Ok(audio)
            }
        }
    }

    /// Synthesizes the scene. Identical scenarios give identical output.
    pub fn render(&self) -> Result<Mixture> {
        let geometry = ArrayGeometry::pair(self.spacing_m)?;
        let target = SourceSpec::target(self.load_source(&self.target)?, self.target.azimuth_deg);
        let interferers = self
            .interferers
            .iter()
            .map(|e| {
                Ok(SourceSpec::interference(
                    self.load_source(e)?,
                    e.azimuth_deg,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = MixtureSpec {
            target,
            interferers,
            sir_db: self.sir_db,
            sensor_noise_snr_db: self.noise_snr_db,
            echo: echo_taps_for_t60(self.echo_t60_ms / 1000.0, self.seed ^ 0xec40),
        };
        Ok(synthesize_mixture(&spec, &geometry, self.seed)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text =
            "# scene\ntarget=synth:4, 90\ninterferer=a.wav,60 # left\ninterferer=synth:5,30\n\
                    sir_db=-3\nseed=9\necho_t60_ms=100\nnoise_snr_db=none\nspacing_m=0.05\n\
                    duration_s=1.5\nsample_rate=8000\n";
        let s = Scenario::parse(text, Path::new("/scenes/x.txt")).unwrap();
        assert_eq!(s.target.source, SourceRef::Synthetic(4));
        assert_eq!(s.interferers.len(), 2);
        assert_eq!(
            s.interferers[0].source,
            SourceRef::File("/scenes/a.wav".into())
        );
        assert_eq!(s.sir_db, -3.0);
        assert_eq!(s.seed, 9);
        assert_eq!(s.noise_snr_db, None);
        assert_eq!(s.sample_rate, 8000);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err =
            Scenario::parse("target=synth:1,90\n\nsir_db=loud\n", Path::new("s.txt")).unwrap_err();
        assert_eq!(err.to_string(), "s.txt:3: bad value 'loud' for sir_db");
        let err = Scenario::parse("target=synth:1,270\n", Path::new("s.txt")).unwrap_err();
        assert!(err.to_string().starts_with("s.txt:1:"));
        let err = Scenario::parse("colour=blue\n", Path::new("s.txt")).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        assert!(Scenario::parse("sir_db=0\n", Path::new("s.txt")).is_err());
    }

    #[test]
    fn missing_source_file_is_reported() {
        let s = Scenario::parse("target=nothere.wav,90\n", Path::new("/tmp/s.txt")).unwrap();
        let err = s.render().unwrap_err();
        assert!(err.to_string().contains("nothere.wav"));
    }

    #[test]
    fn default_scene_renders() {
        let s = Scenario {
            duration_s: 0.5,
            ..Default::default()
        };
        let m = s.render().unwrap();
        assert_eq!(m.mixture.channel_count(), 2);
        assert_eq!(m.interferer_images.len(), 1);
    }
}
