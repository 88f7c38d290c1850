use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{list_frames, load_image};
use crate::kernel::Kernel;
use crate::psf_analytic::{
    average_kernels, synthesize_psf, CameraIntrinsics, GimbalMotion, PsfSynthesisConfig,
};
use crate::psf_estimate::{
    average_frames, estimate_kernel, frames_for_steering, pair_windows, EstimationConfig, PairSpec,
};

pub const INDEX_FILE: &str = "index.json";

/// Steering rates are stored in tenths of a degree per second.
fn rate_key(rate_deg_s: f64) -> i64 {
    (rate_deg_s * 10.0).round() as i64
}

fn key_rate(key: i64) -> f64 {
    key as f64 / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    BlurSharpPair,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Analytic => "analytic",
            Provenance::BlurSharpPair => "blur-sharp-pair",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LutEntry {
    pub kernel: Kernel,
    pub provenance: Provenance,
}

/// Steering rate to PSF lookup table. Lookups never interpolate: a rate
/// that is not stored (after rounding to 0.1 deg/s) is a [`Error::LutMiss`].
#[derive(Debug, Clone, PartialEq)]
pub struct PsfLut {
    camera_id: String,
    entries: BTreeMap<i64, LutEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    camera_id: String,
    entries: Vec<IndexEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    steering_rate_deg_s: f64,
    kernel: String,
    provenance: Provenance,
}

impl PsfLut {
    pub fn new(camera_id: impl Into<String>) -> Self {
        Self {
            camera_id: camera_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn camera_id(&self) -> &str {
        &self.camera_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stores `kernel` for `rate_deg_s`, replacing any previous entry.
    pub fn insert(
        &mut self,
        rate_deg_s: f64,
        kernel: Kernel,
        provenance: Provenance,
    ) -> Result<()> {
        if !(rate_deg_s.is_finite() && rate_deg_s >= 0.0) {
            return Err(Error::invalid(format!(
                "steering rate must be finite and >= 0, got {rate_deg_s}"
            )));
        }
        self.entries
            .insert(rate_key(rate_deg_s), LutEntry { kernel, provenance });
        Ok(())
    }

    pub fn entry(&self, rate_deg_s: f64) -> Result<&LutEntry> {
        self.entries
            .get(&rate_key(rate_deg_s))
            .ok_or(Error::LutMiss { rate_deg_s })
    }

    pub fn get(&self, rate_deg_s: f64) -> Result<&Kernel> {
        self.entry(rate_deg_s).map(|e| &e.kernel)
    }

    /// Stored rates in ascending order.
    pub fn rates(&self) -> Vec<f64> {
        self.entries.keys().map(|&k| key_rate(k)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &LutEntry)> {
        self.entries.iter().map(|(&k, e)| (key_rate(k), e))
    }

    /// Writes `dir/index.json` plus one kernel text file per entry.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut index = IndexFile {
            camera_id: self.camera_id.clone(),
            entries: Vec::with_capacity(self.entries.len()),
        };
        for (rate, entry) in self.iter() {
            let name = format!("psf_{rate:.1}.txt");
            entry.kernel.save(dir.join(&name))?;
            index.entries.push(IndexEntry {
                steering_rate_deg_s: rate,
                kernel: name,
                provenance: entry.provenance,
            });
        }
        let path = dir.join(INDEX_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &index)
            .map_err(|source| Error::Json { path, source })
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(INDEX_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let index: IndexFile =
            serde_json::from_str(&text).map_err(|source| Error::Json { path, source })?;
        let mut lut = PsfLut::new(index.camera_id);
        for e in index.entries {
            let kernel = Kernel::load(dir.join(&e.kernel))?;
            lut.insert(e.steering_rate_deg_s, kernel, e.provenance)?;
        }
        Ok(lut)
    }
}

/// Where the kernels of a new LUT come from.
#[derive(Debug, Clone)]
pub enum LutSource {
    Analytic(PsfSynthesisConfig),
    /// Blur-sharp pairs manufactured from a slow-pan frame directory.
    Pairs(PairsOptions),
}

#[derive(Debug, Clone)]
pub struct PairsOptions {
    pub frame_dir: PathBuf,
    pub estimation: EstimationConfig,
    /// Pairs per rate whose kernels are averaged; windows are spread evenly
    /// over the sequence.
    pub max_pairs: usize,
}

impl PairsOptions {
    pub fn new(frame_dir: impl Into<PathBuf>) -> Self {
        Self {
            frame_dir: frame_dir.into(),
            estimation: EstimationConfig::default(),
            max_pairs: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LutBuild {
    pub lut: PsfLut,
    /// One line per skipped or notable rate.
    pub log: Vec<String>,
}

/// Default camera id: focal length and frame size.
pub fn camera_id(intrinsics: &CameraIntrinsics) -> String {
    format!(
        "f{:.2}_{}x{}",
        intrinsics.focal(),
        intrinsics.width(),
        intrinsics.height()
    )
}

pub fn build_lut(
    intrinsics: &CameraIntrinsics,
    motions: &[GimbalMotion],
    source: &LutSource,
) -> Result<LutBuild> {
    let mut build = LutBuild {
        lut: PsfLut::new(camera_id(intrinsics)),
        log: Vec::new(),
    };
    match source {
        LutSource::Analytic(cfg) => {
            for m in motions {
                let k = synthesize_psf(intrinsics, m, cfg)?;
                build.log.push(format!(
                    "{} deg/s: analytic {}x{}",
                    m.steering_rate_deg_s,
                    k.width(),
                    k.height()
                ));
                build
                    .lut
                    .insert(m.steering_rate_deg_s, k, Provenance::Analytic)?;
            }
        }
        LutSource::Pairs(opts) => {
            if opts.max_pairs == 0 {
                return Err(Error::invalid("max_pairs must be >= 1"));
            }
            opts.estimation.validate()?;
            let frames = list_frames(&opts.frame_dir)?;
            for m in motions {
                let n = frames_for_steering(m);
                match estimate_from_frames(&frames, n, opts)? {
                    Some((k, pairs)) => {
                        build.log.push(format!(
                            "{} deg/s: estimated from {pairs} pairs of N={n}",
                            m.steering_rate_deg_s
                        ));
                        build
                            .lut
                            .insert(m.steering_rate_deg_s, k, Provenance::BlurSharpPair)?;
                    }
                    None => {
                        let line = format!(
                            "{} deg/s: omitted, {} frames are fewer than N={n}",
                            m.steering_rate_deg_s,
                            frames.len()
                        );
                        log::warn!("{line}");
                        build.log.push(line);
                    }
                }
            }
        }
    }
    Ok(build)
}

fn estimate_from_frames(
    frames: &[PathBuf],
    n: usize,
    opts: &PairsOptions,
) -> Result<Option<(Kernel, usize)>> {
    let windows = pair_windows(frames.len(), n, n);
    if windows.is_empty() {
        return Ok(None);
    }
    let take = windows.len().min(opts.max_pairs);
    let picked: Vec<_> = (0..take)
        .map(|i| windows[i * windows.len() / take].clone())
        .collect();
    let spec = PairSpec::new(n)?;
    let kernels = picked
        .into_par_iter()
        .map(|range| {
            let images = frames[range]
                .iter()
                .map(load_image)
                .collect::<Result<Vec<_>>>()?;
            let (blurred, sharp) = average_frames(&images, spec)?;
            estimate_kernel(&blurred, &sharp, &opts.estimation)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some((average_kernels(&kernels)?, take)))
}
