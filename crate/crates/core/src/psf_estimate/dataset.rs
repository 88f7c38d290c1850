//! Blur-sharp pair generation from a slow-pan frame sequence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{average_frames, frames_for_steering, PairSpec};
use crate::error::{Error, Result};
use crate::io::{list_frames, load_image, save_image_with_depth, BitDepth};
use crate::psf_analytic::GimbalMotion;

/// One requested steering rate and the window length that emulates it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairJob {
    pub steering_rate_deg_s: f64,
    pub n: usize,
}

impl PairJob {
    pub fn from_motion(motion: &GimbalMotion) -> Self {
        Self {
            steering_rate_deg_s: motion.steering_rate_deg_s,
            n: frames_for_steering(motion),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DatasetOptions {
    /// Distance between window starts; `None` means non-overlapping windows.
    pub stride: Option<usize>,
    pub bit_depth: BitDepth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub blur_path: String,
    pub sharp_path: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub steering_rate_deg_s: f64,
    pub source_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestWarning {
    pub warning: String,
    pub steering_rate_deg_s: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub pairs: Vec<PairRecord>,
    pub warnings: Vec<ManifestWarning>,
}

impl Manifest {
    /// Writes one JSON object per line: pair records, then warnings.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = |v: serde_json::Value| -> std::io::Result<()> { writeln!(w, "{v}") };
        for p in &self.pairs {
            emit(serde_json::to_value(p).expect("record serializes"))
                .map_err(|e| Error::io(path, e))?;
        }
        for warn in &self.warnings {
            emit(serde_json::to_value(warn).expect("warning serializes"))
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest written by [`Manifest::write_jsonl`].
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Manifest::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
            let json_err = |e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            };
            if v.get("warning").is_some() {
                m.warnings
                    .push(serde_json::from_value(v).map_err(json_err)?);
            } else {
                m.pairs.push(serde_json::from_value(v).map_err(json_err)?);
            }
        }
        Ok(m)
    }
}

/// Start..end frame ranges of every complete window of `n` frames.
pub fn pair_windows(len: usize, n: usize, stride: usize) -> Vec<Range<usize>> {
    if n == 0 || stride == 0 || len < n {
        return Vec::new();
    }
    (0..=(len - n) / stride)
        .map(|i| i * stride..i * stride + n)
        .collect()
}

fn rate_dir_name(rate: f64) -> String {
    format!("sr{rate}")
}

/// Averages sliding windows of `frame_dir` for every job and writes the pairs
/// under `out_dir/sr<rate>/` together with `out_dir/manifest.jsonl`.
pub fn build_pair_dataset(
    frame_dir: &Path,
    jobs: &[PairJob],
    out_dir: &Path,
    opts: &DatasetOptions,
) -> Result<Manifest> {
    let frames = list_frames(frame_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = Manifest::default();
    for job in jobs {
        let spec = PairSpec::new(job.n)?;
        let windows = pair_windows(frames.len(), job.n, opts.stride.unwrap_or(job.n));
        if windows.is_empty() {
            let warning = format!(
                "{} frames in {} are fewer than the {} needed for {} deg/s",
                frames.len(),
                frame_dir.display(),
                job.n,
                job.steering_rate_deg_s
            );
            log::warn!("{warning}");
            manifest.warnings.push(ManifestWarning {
                warning,
                steering_rate_deg_s: job.steering_rate_deg_s,
                n: job.n,
            });
            continue;
        }
        let sub = out_dir.join(rate_dir_name(job.steering_rate_deg_s));
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let records: Vec<PairRecord> = windows
            .into_par_iter()
            .enumerate()
            .map(|(i, range)| write_pair(&frames, range, i, &sub, job, spec, opts.bit_depth))
            .collect::<Result<_>>()?;
        manifest.pairs.extend(records);
    }
    manifest.write_jsonl(&out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}

fn write_pair(
    frames: &[PathBuf],
    range: Range<usize>,
    index: usize,
    sub: &Path,
    job: &PairJob,
    spec: PairSpec,
    depth: BitDepth,
) -> Result<PairRecord> {
    let images = frames[range.clone()]
        .iter()
        .map(load_image)
        .collect::<Result<Vec<_>>>()?;
    let (blurred, sharp) = average_frames(&images, spec)?;
    let blur_path = sub.join(format!("blur_{index:05}.pgm"));
    let sharp_path = sub.join(format!("sharp_{index:05}.pgm"));
    save_image_with_depth(&blurred, &blur_path, depth)?;
    save_image_with_depth(&sharp, &sharp_path, depth)?;
    Ok(PairRecord {
        blur_path: blur_path.to_string_lossy().into_owned(),
        sharp_path: sharp_path.to_string_lossy().into_owned(),
        n: job.n,
        steering_rate_deg_s: job.steering_rate_deg_s,
        source_indices: range.collect(),
    })
}
