use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::run::{run_pool, summarize, FrameJob, FrameSource};
use crate::convolve::{convolve, Boundary};
use crate::deconv::{DeblurConfig, Method};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::kernel::Kernel;
use crate::noise::{add_awgn, NoiseSpec};

/// Frame count of the streaming protocol.
pub const STREAMING_FRAMES: usize = 30;
/// Frame count of the batch protocol.
pub const BATCH_FRAMES: usize = 312;

/// Distinct frames generated per synthetic sequence; longer sequences
/// cycle through them.
const DISTINCT_FRAMES: usize = 8;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub methods: Vec<DeblurConfig>,
    pub kernel: Kernel,
    pub width: usize,
    pub height: usize,
    pub workers: usize,
    pub streaming_frames: usize,
    pub batch_frames: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(methods: Vec<DeblurConfig>, kernel: Kernel) -> Self {
        Self {
            methods,
            kernel,
            width: 558,
            height: 481,
            workers: 1,
            streaming_frames: STREAMING_FRAMES,
            batch_frames: BATCH_FRAMES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub protocol: &'static str,
    pub frames: usize,
    pub workers: usize,
    pub ms_per_frame: f64,
    pub wall_ms: f64,
    pub fps: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub warnings: Vec<String>,
}

impl BenchReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for row in &self.rows {
            w.serialize(row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
}

/// Blurred, noisy synthetic frames of a slowly panning textured scene.
pub fn synthetic_sequence(
    width: usize,
    height: usize,
    count: usize,
    kernel: &Kernel,
    seed: u64,
) -> Result<Vec<Arc<GrayImage>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = GrayImage::from_fn(width, height, |_, _| rng.gen::<f64>())?;
    noise = convolve(&noise, &Kernel::gaussian(9, 2.0)?, Boundary::Periodic)?;
    let (lo, hi) = (noise.min(), noise.max());
    let scene = GrayImage::from_fn(width, height, |x, y| {
        let t = (noise.get(x, y) - lo) / (hi - lo).max(1e-12);
        let bars = if (x / 24 + y / 32) % 2 == 0 {
            0.25
        } else {
            0.0
        };
        0.15 + 0.5 * t + bars
    })?;
    let distinct = count.min(DISTINCT_FRAMES);
    let frames = (0..distinct)
        .map(|i| {
            let shifted = scene.shifted_periodic(3 * i as isize, 0);
            let blurred = convolve(&shifted, kernel, Boundary::Symmetric)?;
            add_awgn(
                &blurred,
                NoiseSpec::new(38.0, seed.wrapping_add(i as u64 + 1)),
            )
            .map(Arc::new)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..count).map(|i| frames[i % distinct].clone()).collect())
}

/// Times every configured method on the streaming and batch protocols.
/// The expected ordering Wiener < RL < hyper-Laplacian is only reported as
/// a warning when violated.
pub fn bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.methods.is_empty() {
        return Err(Error::invalid("bench needs at least one method"));
    }
    if cfg.workers == 0 {
        return Err(Error::invalid("workers must be >= 1"));
    }
    let longest = cfg.streaming_frames.max(cfg.batch_frames);
    let frames = synthetic_sequence(cfg.width, cfg.height, longest, &cfg.kernel, cfg.seed)?;
    let kernel = Arc::new(cfg.kernel.clone());
    let mut report = BenchReport::default();
    for (protocol, count) in [
        ("streaming", cfg.streaming_frames),
        ("batch", cfg.batch_frames),
    ] {
        if count == 0 {
            continue;
        }
        for method in &cfg.methods {
            method.params.validate()?;
            let jobs = frames[..count]
                .iter()
                .enumerate()
                .map(|(index, f)| FrameJob {
                    index,
                    name: format!("synthetic_{index:04}"),
                    source: FrameSource::Memory(f.clone()),
                    kernel: kernel.clone(),
                })
                .collect();
            let outcome = run_pool(jobs, cfg.workers, method, |_, _| Ok(()));
            let t = summarize(outcome, method.method(), cfg.workers);
            if let Some(f) = t.failures.first() {
                return Err(Error::invalid(format!(
                    "bench frame {} failed: {}",
                    f.frame, f.error
                )));
            }
            report.rows.push(BenchRow {
                method: t.method,
                protocol,
                frames: count,
                workers: cfg.workers,
                ms_per_frame: t.wall_ms / count as f64,
                wall_ms: t.wall_ms,
                fps: t.fps,
            });
        }
        if let Some(w) = ordering_warning(&report.rows, protocol) {
            log::warn!("{w}");
            report.warnings.push(w);
        }
    }
    Ok(report)
}

fn ordering_warning(rows: &[BenchRow], protocol: &str) -> Option<String> {
    let ms = |m: Method| {
        rows.iter()
            .find(|r| r.protocol == protocol && r.method == m)
            .map(|r| r.ms_per_frame)
    };
    let timed: Vec<(Method, f64)> = Method::ALL
        .iter()
        .filter_map(|&m| ms(m).map(|t| (m, t)))
        .collect();
    let bad = timed.windows(2).find(|p| p[0].1 >= p[1].1)?;
    Some(format!(
        "{protocol}: {} ({:.1} ms/frame) is not faster than {} ({:.1} ms/frame)",
        bad[0].0, bad[0].1, bad[1].0, bad[1].1
    ))
}

/// Warning when `fps_w` falls below 60% of linear scaling from `fps_1`.
pub fn scaling_warning(fps_1: f64, fps_w: f64, workers: usize) -> Option<String> {
    let target = 0.6 * workers as f64 * fps_1;
    (fps_w < target).then(|| {
        format!("{workers} workers reached {fps_w:.1} fps, below 0.6 x {workers} x {fps_1:.1} = {target:.1}")
    })
}
