use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crossbeam_channel::{bounded, unbounded};
use serde::{Deserialize, Serialize};

use super::lut::PsfLut;
use crate::deconv::{deblur_timed, DeblurConfig, FrameTiming, Method};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::io::{frame_number, list_frames, load_image, save_image_with_depth, BitDepth};
use crate::kernel::Kernel;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub workers: usize,
    pub deblur: DeblurConfig,
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub steering_rate_deg_s: f64,
    /// JSON object mapping frame numbers to steering rates; frames it does
    /// not list use `steering_rate_deg_s`.
    pub rate_sidecar: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub bit_depth: BitDepth,
}

impl PipelineConfig {
    pub fn new(
        input_dir: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        steering_rate_deg_s: f64,
    ) -> Self {
        Self {
            workers: 1,
            deblur: DeblurConfig::new(crate::deconv::MethodParams::default_for(Method::Wiener)),
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            steering_rate_deg_s,
            rate_sidecar: None,
            report_path: None,
            bit_depth: BitDepth::Sixteen,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::invalid("workers must be >= 1"));
        }
        self.deblur.params.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFailure {
    pub frame: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub method: Method,
    pub workers: usize,
    /// Successful frames in input order.
    pub frames: Vec<FrameTiming>,
    pub failures: Vec<FrameFailure>,
    pub wall_ms: f64,
    pub fps: f64,
    pub mean_ms_per_frame: f64,
    pub machine: String,
}

impl TimingReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }
}

/// Logical CPU count, OS and architecture of the running machine.
pub fn machine_note() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpus} logical CPUs, {}-{}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// A frame waiting in the queue.
pub(crate) struct FrameJob {
    pub index: usize,
    pub name: String,
    pub source: FrameSource,
    pub kernel: Arc<Kernel>,
}

pub(crate) enum FrameSource {
    File(PathBuf),
    Memory(Arc<GrayImage>),
}

pub(crate) struct PoolOutcome {
    pub frames: Vec<FrameTiming>,
    pub failures: Vec<FrameFailure>,
    pub wall_ms: f64,
}

/// Feeds `jobs` in order through a bounded queue to `workers` threads and
/// hands every result to `sink`. Results are reordered by job index, so the
/// outcome does not depend on scheduling.
pub(crate) fn run_pool<S>(
    jobs: Vec<FrameJob>,
    workers: usize,
    cfg: &DeblurConfig,
    sink: S,
) -> PoolOutcome
where
    S: Fn(&FrameJob, &GrayImage) -> Result<()> + Sync,
{
    let start = Instant::now();
    let (job_tx, job_rx) = bounded::<FrameJob>(2 * workers);
    let (res_tx, res_rx) = unbounded();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let job_rx = job_rx.clone();
            let res_tx = res_tx.clone();
            let sink = &sink;
            scope.spawn(move || {
                for job in job_rx {
                    let outcome = process(&job, cfg, sink);
                    if res_tx.send((job.index, job.name, outcome)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(res_tx);
        for job in jobs {
            if job_tx.send(job).is_err() {
                break;
            }
        }
        drop(job_tx);
    });
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut results: Vec<_> = res_rx.into_iter().collect();
    results.sort_by_key(|r| r.0);
    let mut out = PoolOutcome {
        frames: Vec::new(),
        failures: Vec::new(),
        wall_ms,
    };
    for (_, name, outcome) in results {
        match outcome {
            Ok(t) => out.frames.push(t),
            Err(e) => {
                log::warn!("skipping frame {name}: {e}");
                out.failures.push(FrameFailure {
                    frame: name,
                    error: e.to_string(),
                });
            }
        }
    }
    out
}

fn process<S>(job: &FrameJob, cfg: &DeblurConfig, sink: &S) -> Result<FrameTiming>
where
    S: Fn(&FrameJob, &GrayImage) -> Result<()>,
{
    let loaded;
    let image = match &job.source {
        FrameSource::File(path) => {
            loaded = load_image(path)?;
            &loaded
        }
        FrameSource::Memory(img) => img.as_ref(),
    };
    let (out, timing) = deblur_timed(image, &job.kernel, cfg, &job.name)?;
    sink(job, &out)?;
    Ok(timing)
}

pub(crate) fn summarize(outcome: PoolOutcome, method: Method, workers: usize) -> TimingReport {
    let n = outcome.frames.len();
    let secs = outcome.wall_ms / 1e3;
    let fps = if n == 0 || secs <= 0.0 {
        0.0
    } else {
        n as f64 / secs
    };
    let mean = if n == 0 {
        0.0
    } else {
        outcome.frames.iter().map(|f| f.ms).sum::<f64>() / n as f64
    };
    TimingReport {
        method,
        workers,
        frames: outcome.frames,
        failures: outcome.failures,
        wall_ms: outcome.wall_ms,
        fps,
        mean_ms_per_frame: mean,
        machine: machine_note(),
    }
}

fn read_sidecar(path: &Path) -> Result<BTreeMap<u64, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: BTreeMap<String, f64> = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<u64>()
                .map(|i| (i, v))
                .map_err(|_| Error::invalid(format!("{}: bad frame index `{k}`", path.display())))
        })
        .collect()
}

/// Deblurs every frame of `cfg.input_dir` with the LUT kernel for its rate
/// and writes it to `cfg.output_dir` under the same file name.
///
/// Every rate the run needs is looked up before the first frame is touched,
/// so a LUT miss aborts cleanly. Frames that cannot be read or deblurred are
/// listed in the report and skipped.
pub fn run_pipeline(cfg: &PipelineConfig, lut: &PsfLut) -> Result<TimingReport> {
    cfg.validate()?;
    let paths = list_frames(&cfg.input_dir)?;
    let sidecar = match &cfg.rate_sidecar {
        Some(p) => read_sidecar(p)?,
        None => BTreeMap::new(),
    };
    let mut kernels: BTreeMap<u64, Arc<Kernel>> = BTreeMap::new();
    let mut kernel_for = |rate: f64| -> Result<Arc<Kernel>> {
        let bits = rate.to_bits();
        if let Some(k) = kernels.get(&bits) {
            return Ok(k.clone());
        }
        let k = Arc::new(lut.get(rate)?.clone());
        kernels.insert(bits, k.clone());
        Ok(k)
    };
    let mut jobs = Vec::with_capacity(paths.len());
    for (index, path) in paths.into_iter().enumerate() {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let rate = frame_number(&stem)
            .and_then(|i| sidecar.get(&i).copied())
            .unwrap_or(cfg.steering_rate_deg_s);
        jobs.push(FrameJob {
            index,
            name,
            source: FrameSource::File(path),
            kernel: kernel_for(rate)?,
        });
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let out_dir = &cfg.output_dir;
    let depth = cfg.bit_depth;
    let outcome = run_pool(jobs, cfg.workers, &cfg.deblur, |job, img| {
        save_image_with_depth(img, out_dir.join(&job.name), depth)
    });
    let report = summarize(outcome, cfg.deblur.method(), cfg.workers);
    log::info!(
        "{} frames ({} skipped), {:.1} fps with {} workers",
        report.frames.len(),
        report.failures.len(),
        report.fps,
        report.workers
    );
    if let Some(path) = &cfg.report_path {
        report.write_json(path)?;
    }
    Ok(report)
}
