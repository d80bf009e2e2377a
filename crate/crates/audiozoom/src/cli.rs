//! Command-line interface.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use audiozoom_core::gjbf::select_filter_length;
use audiozoom_core::metrics::{
    input_sinr_db, mse_db, projection_osinr_db, EvalReport, StageReport, DEFAULT_MAX_LAG,
};
use audiozoom_core::pipeline::{evaluate, run_zoom, ZoomOutput};
use audiozoom_core::AudioBuffer;
use clap::{Args, Parser, Subcommand};
use log::info;

use crate::config::{ZoomConfig, ZoomSettings};
use crate::dump::{dump_run, sweep_csv};
use crate::error::{CliError, Result};
use crate::scenario::Scenario;
use crate::wav::{read_wav, write_wav};

/// Output peak after normalization, in dBFS.
pub const NORMALIZE_PEAK_DBFS: f64 = -1.0;

#[derive(Debug, Parser)]
#[command(
    name = "audiozoom",
    version,
    about = "Zoom in on the broadside talker of a two-microphone recording"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a two-microphone scene and its component images.
    Simulate {
        /// Scenario file; the built-in two-talker scene when omitted.
        scenario: Option<PathBuf>,
        /// Directory for mixture.wav, target_img.wav and interf_img.wav.
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the length of synthetic sources, in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Enhance the broadside talker of a stereo recording.
    Zoom {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        settings: SettingsArgs,
        /// Write intermediate spectrograms and block decisions here.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Append a metrics row to this CSV file; needs the images.
        #[arg(long, requires_all = ["target_img", "interf_img"])]
        report: Option<PathBuf>,
        /// Target image of a simulated input, for evaluation.
        #[arg(long, requires = "interf_img")]
        target_img: Option<PathBuf>,
        /// Interference-plus-noise image of a simulated input.
        #[arg(long, requires = "target_img")]
        interf_img: Option<PathBuf>,
    },
    /// Score an enhanced signal against the images of its scene.
    Eval {
        estimate: PathBuf,
        #[arg(long)]
        target_img: PathBuf,
        #[arg(long)]
        interf_img: PathBuf,
        /// Append a metrics row to this CSV file.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Largest delay searched when aligning, in samples.
        #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
        max_lag: usize,
    },
    /// Pick the GJBF filter length with the highest mean SINR.
    Sweep {
        input: PathBuf,
        /// Candidate lengths, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<usize>,
        /// Write `length,sinr_db` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
}

/// Processing settings; each flag overrides the same key of `--config`.
#[derive(Debug, Default, Args)]
pub struct SettingsArgs {
    /// File of `key=value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mpdr or gjbf.
    #[arg(long)]
    pub beamformer: Option<String>,
    #[arg(long)]
    pub frame_length: Option<String>,
    #[arg(long)]
    pub hop_length: Option<String>,
    /// hann, sqrt_hann or rect.
    #[arg(long)]
    pub window: Option<String>,
    /// MPDR diagonal loading relative to the per-bin sensor power.
    #[arg(long)]
    pub mpdr_alpha: Option<String>,
    /// Adaptive filter taps, or `auto` to sweep.
    #[arg(long)]
    pub gjbf_length: Option<String>,
    #[arg(long)]
    pub gjbf_mu: Option<String>,
    /// Candidate lengths for `--gjbf-length auto`.
    #[arg(long)]
    pub gjbf_sweep: Option<String>,
    /// Macro-block size as FRAMESxBINS.
    #[arg(long)]
    pub bt_macro: Option<String>,
    #[arg(long)]
    pub bt_h: Option<String>,
    #[arg(long)]
    pub bt_threshold: Option<String>,
    /// Run the block-thresholding post-filter.
    #[arg(long)]
    pub bt_enabled: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Peak-normalize the output to -1 dBFS.
    #[arg(long)]
    pub normalize: Option<String>,
}

impl SettingsArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 14] {
        [
            ("beamformer", &self.beamformer),
            ("frame_length", &self.frame_length),
            ("hop_length", &self.hop_length),
            ("window", &self.window),
            ("mpdr_alpha", &self.mpdr_alpha),
            ("gjbf_length", &self.gjbf_length),
            ("gjbf_mu", &self.gjbf_mu),
            ("gjbf_sweep", &self.gjbf_sweep),
            ("bt_macro", &self.bt_macro),
            ("bt_h", &self.bt_h),
            ("bt_threshold", &self.bt_threshold),
            ("bt_enabled", &self.bt_enabled),
            ("seed", &self.seed),
            ("normalize", &self.normalize),
        ]
    }

    /// Defaults, then the config file, then flags.
    pub fn to_config(&self) -> Result<ZoomConfig> {
        let mut config = ZoomConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        for (key, value) in self.flags() {
            if let Some(value) = value {
                config
                    .set(key, value)
                    .map_err(|m| CliError::Usage(format!("--{}: {m}", key.replace('_', "-"))))?;
            }
        }
        Ok(config)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            out_dir,
            seed,
            duration,
        } => simulate(scenario.as_deref(), &out_dir, seed, duration),
        Command::Zoom {
            input,
            output,
            settings,
            dump,
            report,
            target_img,
            interf_img,
        } => {
            let images = target_img.zip(interf_img);
            zoom(
                &input,
                &output,
                &settings,
                dump.as_deref(),
                report.as_deref(),
                images.as_ref().map(|(t, i)| (t.as_path(), i.as_path())),
            )
        }
        Command::Eval {
            estimate,
            target_img,
            interf_img,
            report,
            max_lag,
        } => eval(
            &estimate,
            &target_img,
            &interf_img,
            report.as_deref(),
            max_lag,
        ),
        Command::Sweep {
            input,
            lengths,
            csv,
            settings,
        } => sweep(&input, &lengths, csv.as_deref(), &settings),
    }
}

fn simulate(
    scenario: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
    duration: Option<f64>,
) -> Result<()> {
    let mut scene = match scenario {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    if let Some(seed) = seed {
        scene.seed = seed;
    }
    if let Some(duration) = duration {
        scene.duration_s = duration;
    }
    let mix = scene.render()?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write_wav(out_dir.join("mixture.wav"), &mix.mixture)?;
    write_wav(out_dir.join("target_img.wav"), &mix.target_image)?;
    write_wav(out_dir.join("interf_img.wav"), &mix.interference_image())?;
    println!(
        "wrote {} samples at {} Hz to {}, input SINR {:.3} dB",
        mix.mixture.len(),
        mix.mixture.sample_rate(),
        out_dir.display(),
        input_sinr_db(&mix.target_image, &mix.interference_image(), 0)?
    );
    Ok(())
}

fn read_stereo(path: &Path) -> Result<AudioBuffer> {
    let audio = read_wav(path)?;
    if audio.channel_count() != 2 {
        return Err(CliError::Data(format!(
            "{}: two channels required, found {}",
            path.display(),
            audio.channel_count()
        )));
    }
    Ok(audio)
}

/// Scales `audio` so its peak sits at [`NORMALIZE_PEAK_DBFS`]; returns the gain.
fn normalize(audio: &mut AudioBuffer) -> f64 {
    let peak = audio.peak();
    if peak == 0.0 {
        return 1.0;
    }
    let gain = 10f64.powf(NORMALIZE_PEAK_DBFS / 20.0) / peak;
    audio.scale(gain);
    gain
}

/// Appends one report row, creating the file with a commented preamble and
/// the column header first.
fn append_report(path: &Path, preamble: &str, report: &EvalReport) -> Result<()> {
    let fresh = !path.exists();
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut text = String::new();
    if fresh {
        for line in preamble.lines() {
            let _ = writeln!(text, "# {line}");
        }
        let _ = writeln!(text, "{}", report.csv_header());
    }
    let _ = writeln!(text, "{}", report.csv_row());
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

/// Reads both images; with `len` set they must also match the signal length.
fn read_images(
    target: &Path,
    interf: &Path,
    len: Option<usize>,
) -> Result<(AudioBuffer, AudioBuffer)> {
    let t = read_wav(target)?;
    let i = read_wav(interf)?;
    if t.channel_count() != i.channel_count() || t.len() != i.len() {
        return Err(CliError::Data(format!(
            "{} and {} differ in shape",
            target.display(),
            interf.display()
        )));
    }
    if let Some(len) = len.filter(|l| *l != t.len()) {
        return Err(CliError::Data(format!(
            "{} has {} samples, the signal {len}",
            target.display(),
            t.len()
        )));
    }
    Ok((t, i))
}

fn diagnostics(config: &ZoomConfig, input: &AudioBuffer, zoom: &ZoomOutput) -> String {
    let mut d = String::new();
    let _ = writeln!(
        d,
        "input: {} samples, {} Hz, {:.3} s",
        input.len(),
        input.sample_rate(),
        input.duration_s()
    );
    let _ = writeln!(d, "frames: {}, bins: {}", zoom.z.frames(), zoom.z.bins());
    let _ = writeln!(d, "beamformer: {}", config.beamformer);
    if let Some(length) = zoom.gjbf_length {
        let _ = writeln!(d, "gjbf length: {length}");
    }
    if let Some(sweep) = &zoom.sweep {
        for p in &sweep.curve {
            let _ = writeln!(d, "  sweep {:>5} taps: {:.3} dB", p.length, p.mean_sinr_db);
        }
        for (length, err) in &sweep.skipped {
            let _ = writeln!(d, "  sweep {length:>5} taps skipped: {err}");
        }
    }
    if let (Some(gains), Some(grid)) = (&zoom.gains, &zoom.grid) {
        let mean = gains.iter().sum::<f64>() / gains.len().max(1) as f64;
        let zeroed = gains.iter().filter(|g| **g == 0.0).count();
        let _ = writeln!(
            d,
            "post-filter: {} macro-blocks, mean gain {:.4}, {} of {} coefficients zeroed",
            grid.macro_blocks.len(),
            mean,
            zeroed,
            gains.len()
        );
    }
    d
}

fn zoom(
    input: &Path,
    output: &Path,
    args: &SettingsArgs,
    dump: Option<&Path>,
    report: Option<&Path>,
    images: Option<(&Path, &Path)>,
) -> Result<()> {
    let config = args.to_config()?;
    let ZoomSettings {
        pipeline,
        normalize: do_normalize,
    } = config.resolve()?;
    let x = read_stereo(input)?;
    info!("zooming {} with {}", input.display(), pipeline.beamformer);
    let result = run_zoom(&x, &pipeline)?;

    let mut diag = format!("{}{}", config.to_text(), diagnostics(&config, &x, &result));
    let eval = match images {
        Some((t, i)) => {
            let (target, interf) = read_images(t, i, Some(x.len()))?;
            Some(evaluate(&result, &target, &interf)?)
        }
        None => None,
    };

    let mut out = result.output.clone();
    let gain = if do_normalize {
        normalize(&mut out)
    } else {
        1.0
    };
    let _ = writeln!(
        diag,
        "output gain: {gain:.6} ({:.3} dB)",
        20.0 * gain.log10()
    );
    write_wav(output, &out)?;

    if let Some(eval) = &eval {
        print!("{eval}");
        let _ = write!(diag, "{eval}");
        if let Some(path) = report {
            append_report(path, &config.to_text(), eval)?;
        }
    }
    if let Some(dir) = dump {
        dump_run(dir, &result, &diag)?;
    }
    if let Some(length) = result.gjbf_length {
        println!("gjbf length: {length}");
    }
    println!("output gain: {:.3} dB", 20.0 * gain.log10());
    Ok(())
}

fn eval(
    estimate: &Path,
    target_img: &Path,
    interf_img: &Path,
    report: Option<&Path>,
    max_lag: usize,
) -> Result<()> {
    let est = read_wav(estimate)?;
    let (target, interf) = read_images(target_img, interf_img, None)?;
    let reference = target.channel(0);
    let stage = StageReport {
        stage: "output".into(),
        osinr_db: projection_osinr_db(est.channel(0), reference, max_lag)?,
        mse_db: mse_db(est.channel(0), reference, max_lag)?,
    };
    let result = EvalReport::new(input_sinr_db(&target, &interf, 0)?, vec![stage])?;
    print!("{result}");
    if let Some(path) = report {
        let preamble = format!(
            "estimate={}\ntarget_img={}\ninterf_img={}\nmax_lag={max_lag}",
            estimate.display(),
            target_img.display(),
            interf_img.display()
        );
        append_report(path, &preamble, &result)?;
    }
    Ok(())
}

fn sweep(input: &Path, lengths: &[usize], csv: Option<&Path>, args: &SettingsArgs) -> Result<()> {
    let settings = args.to_config()?.resolve()?;
    let x = read_stereo(input)?;
    let result = select_filter_length(
        &x.extract(0),
        &x.extract(1),
        lengths,
        &settings.pipeline.gjbf,
        settings.pipeline.stft,
    )?;
    for p in &result.curve {
        println!("{:>6} taps  {:>9.3} dB", p.length, p.mean_sinr_db);
    }
    for (length, err) in &result.skipped {
        println!("{length:>6} taps  skipped: {err}");
    }
    println!("best length: {}", result.best_length);
    if let Some(path) = csv {
        sweep_csv(path.to_path_buf(), &result)?;
    }
    Ok(())
}
