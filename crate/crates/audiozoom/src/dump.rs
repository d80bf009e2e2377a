//! Intermediate results of a zoom run as CSV files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use audiozoom_core::blockthresh::{BlockGrid, VarianceMap};
use audiozoom_core::gjbf::SweepResult;
use audiozoom_core::pipeline::ZoomOutput;
use audiozoom_core::Spectrogram;

use crate::error::{CliError, Result};

struct CsvFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvFile {
    fn create(path: PathBuf, header: &str) -> Result<Self> {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut csv = Self {
            path,
            out: BufWriter::new(file),
        };
        csv.line(format_args!("{header}"))?;
        Ok(csv)
    }

    fn line(&mut self, args: std::fmt::Arguments<'_>) -> Result<()> {
        writeln!(self.out, "{args}").map_err(|e| CliError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn spectrogram_csv(path: PathBuf, spec: &Spectrogram) -> Result<()> {
    let params = spec.params();
    let mut csv = CsvFile::create(path, "frame,bin,frequency_hz,magnitude")?;
    for frame in 0..spec.frames() {
        for (bin, value) in spec.frame(frame).iter().enumerate() {
            let f = params.bin_frequency(bin, spec.sample_rate());
            csv.line(format_args!("{frame},{bin},{f},{:e}", value.norm()))?;
        }
    }
    csv.finish()
}

fn variance_csv(path: PathBuf, sigma2: &VarianceMap, template: &Spectrogram) -> Result<()> {
    let params = template.params();
    let mut csv = CsvFile::create(path, "frame,bin,frequency_hz,variance")?;
    for frame in 0..sigma2.frames() {
        for bin in 0..sigma2.bins() {
            let f = params.bin_frequency(bin, template.sample_rate());
            csv.line(format_args!(
                "{frame},{bin},{f},{:e}",
                sigma2.get(bin, frame)
            ))?;
        }
    }
    csv.finish()
}

/// One row per sub-block with its score and gain.
pub fn grid_csv(path: PathBuf, grid: &BlockGrid) -> Result<()> {
    let mut csv = CsvFile::create(
        path,
        "macro_frame,macro_bin,h_used,v,frame,bin,frames,bins,zeta,attenuation",
    )?;
    for block in &grid.macro_blocks {
        let choice = &block.choice;
        let regions = choice
            .tiling
            .sub_blocks(block.region.frame0, block.region.bin0);
        for ((r, zeta), a) in regions.zip(&choice.zetas).zip(&choice.attenuations) {
            csv.line(format_args!(
                "{},{},{},{},{},{},{},{},{:e},{}",
                block.region.frame0,
                block.region.bin0,
                block.h_used,
                choice.tiling.v,
                r.frame0,
                r.bin0,
                r.frames,
                r.bins,
                zeta,
                a
            ))?;
        }
    }
    csv.finish()
}

/// `length,sinr_db` for every candidate that ran.
pub fn sweep_csv(path: PathBuf, sweep: &SweepResult) -> Result<()> {
    let mut csv = CsvFile::create(path, "length,sinr_db")?;
    for point in &sweep.curve {
        csv.line(format_args!("{},{}", point.length, point.mean_sinr_db))?;
    }
    csv.finish()
}

/// Writes every intermediate of `zoom` plus `diagnostics` into `dir`.
pub fn dump_run(dir: &Path, zoom: &ZoomOutput, diagnostics: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    spectrogram_csv(dir.join("y1.csv"), &zoom.inputs[0])?;
    spectrogram_csv(dir.join("z.csv"), &zoom.z)?;
    if let Some(s) = &zoom.s {
        spectrogram_csv(dir.join("s.csv"), s)?;
    }
    if let Some(sigma2) = &zoom.sigma2 {
        variance_csv(dir.join("sigma2.csv"), sigma2, &zoom.z)?;
    }
    if let Some(grid) = &zoom.grid {
        grid_csv(dir.join("bt_grid.csv"), grid)?;
    }
    if let Some(sweep) = &zoom.sweep {
        sweep_csv(dir.join("sweep.csv"), sweep)?;
    }
    let path = dir.join("diagnostics.txt");
    std::fs::write(&path, diagnostics).map_err(|e| CliError::io(&path, e))
}
