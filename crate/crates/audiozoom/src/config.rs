//! Processing settings for `audiozoom zoom`, read from `key=value` files and
//! overridden by flags.

use std::fmt::Write as _;
use std::path::Path;

use audiozoom_core::blockthresh::BlockThresholdParams;
use audiozoom_core::gjbf::{GjbfConfig, DEFAULT_SWEEP};
use audiozoom_core::mpdr::Loading;
use audiozoom_core::pipeline::{Beamformer, PipelineConfig};
use audiozoom_core::{StftParams, Window};

use crate::error::{CliError, Result};

/// Keys accepted in configuration files; each also has a `--key-name` flag.
pub const KEYS: [&str; 14] = [
    "beamformer",
    "frame_length",
    "hop_length",
    "window",
    "mpdr_alpha",
    "gjbf_length",
    "gjbf_mu",
    "gjbf_sweep",
    "bt_macro",
    "bt_h",
    "bt_threshold",
    "bt_enabled",
    "seed",
    "normalize",
];

/// Every setting of a zoom run, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomConfig {
    pub beamformer: Beamformer,
    pub frame_length: usize,
    pub hop_length: usize,
    pub window: Window,
    /// Diagonal loading relative to the mean sensor power of each bin.
    pub mpdr_alpha: f64,
    /// `None` picks the length from `gjbf_sweep`.
    pub gjbf_length: Option<usize>,
    pub gjbf_mu: f64,
    pub gjbf_sweep: Vec<usize>,
    /// Macro-block size as (frames, bins).
    pub bt_macro: (usize, usize),
    pub bt_h: u32,
    pub bt_threshold: f64,
    pub bt_enabled: bool,
    pub seed: u64,
    /// Peak-normalize the written output to -1 dBFS.
    pub normalize: bool,
}

impl Default for ZoomConfig {
    fn default() -> Self {
        let pipeline = PipelineConfig::default();
        let bt = pipeline.block_threshold;
        let Loading::TraceRelative(alpha) = pipeline.mpdr_loading else {
            unreachable!("default loading is trace-relative")
        };
        Self {
            beamformer: pipeline.beamformer,
            frame_length: pipeline.stft.frame_length(),
            hop_length: pipeline.stft.hop_length(),
            window: pipeline.stft.window(),
            mpdr_alpha: alpha,
            gjbf_length: Some(pipeline.gjbf.filter_length),
            gjbf_mu: pipeline.gjbf.step_size,
            gjbf_sweep: DEFAULT_SWEEP.to_vec(),
            bt_macro: (bt.macro_frames, bt.macro_bins),
            bt_h: bt.h,
            bt_threshold: bt.threshold,
            bt_enabled: pipeline.bt_enabled,
            seed: pipeline.seed,
            normalize: true,
        }
    }
}

/// Validated settings ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomSettings {
    pub pipeline: PipelineConfig,
    pub normalize: bool,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value '{value}' for {key}"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("bad value '{value}' for {key}")),
    }
}

fn parse_list(key: &str, value: &str) -> std::result::Result<Vec<usize>, String> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join(list: &[usize]) -> String {
    list.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ZoomConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "beamformer" => {
                self.beamformer = value
                    .parse()
                    .map_err(|e: audiozoom_core::Error| e.to_string())?
            }
            "frame_length" => self.frame_length = parse(key, value)?,
            "hop_length" => self.hop_length = parse(key, value)?,
            "window" => {
                self.window = value
                    .parse()
                    .map_err(|e: audiozoom_core::Error| e.to_string())?
            }
            "mpdr_alpha" => self.mpdr_alpha = parse(key, value)?,
            "gjbf_length" if value == "auto" => self.gjbf_length = None,
            "gjbf_length" => self.gjbf_length = Some(parse(key, value)?),
            "gjbf_mu" => self.gjbf_mu = parse(key, value)?,
            "gjbf_sweep" => self.gjbf_sweep = parse_list(key, value)?,
            "bt_macro" => {
                let (p, q) = value.split_once(['x', 'X']).ok_or_else(|| {
                    format!("bad value '{value}' for {key}, expected FRAMESxBINS")
                })?;
                self.bt_macro = (parse(key, p.trim())?, parse(key, q.trim())?);
            }
            "bt_h" => self.bt_h = parse(key, value)?,
            "bt_threshold" => self.bt_threshold = parse(key, value)?,
            "bt_enabled" => self.bt_enabled = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "normalize" => self.normalize = parse_bool(key, value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Applies a configuration file on top of `self`.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
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
            self.set(key.trim(), value).map_err(fail)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// Text form of every key, readable by [`ZoomConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key}={}", self.value(key));
        }
        out
    }

    fn value(&self, key: &str) -> String {
        match key {
            "beamformer" => self.beamformer.to_string(),
            "frame_length" => self.frame_length.to_string(),
            "hop_length" => self.hop_length.to_string(),
            "window" => self.window.to_string(),
            "mpdr_alpha" => self.mpdr_alpha.to_string(),
            "gjbf_length" => self
                .gjbf_length
                .map_or_else(|| "auto".to_string(), |l| l.to_string()),
            "gjbf_mu" => self.gjbf_mu.to_string(),
            "gjbf_sweep" => join(&self.gjbf_sweep),
            "bt_macro" => format!("{}x{}", self.bt_macro.0, self.bt_macro.1),
            "bt_h" => self.bt_h.to_string(),
            "bt_threshold" => self.bt_threshold.to_string(),
            "bt_enabled" => self.bt_enabled.to_string(),
            "seed" => self.seed.to_string(),
            "normalize" => self.normalize.to_string(),
            _ => unreachable!("value() is only called with KEYS"),
        }
    }

    /// Checks every value and builds the pipeline configuration.
    pub fn resolve(&self) -> Result<ZoomSettings> {
        let stft = StftParams::new(self.frame_length, self.hop_length, self.window)?;
        let mut gjbf = GjbfConfig {
            step_size: self.gjbf_mu,
            ..Default::default()
        };
        let gjbf_sweep = match self.gjbf_length {
            Some(length) => {
                gjbf.filter_length = length;
                None
            }
            None => Some(self.gjbf_sweep.clone()),
        };
        let pipeline = PipelineConfig {
            beamformer: self.beamformer,
            stft,
            mpdr_loading: Loading::TraceRelative(self.mpdr_alpha),
            gjbf,
            gjbf_sweep,
            block_threshold: BlockThresholdParams {
                macro_frames: self.bt_macro.0,
                macro_bins: self.bt_macro.1,
                h: self.bt_h,
                threshold: self.bt_threshold,
            },
            bt_enabled: self.bt_enabled,
            seed: self.seed,
        };
        pipeline.validate()?;
        Ok(ZoomSettings {
            pipeline,
            normalize: self.normalize,
        })
    }
}
