use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use rayon::prelude::*;

use gimbal_deblur::deconv::{
    deblur_timed, DeblurConfig, HyperLapParams, Method, MethodParams, RlParams, WienerParams,
};
use gimbal_deblur::io::{load_image, save_image, BitDepth};
use gimbal_deblur::metrics::{
    evaluate_pairs, read_eval_manifest, write_eval_csv, ExternalScores, SsimConfig,
};
use gimbal_deblur::pipeline::{
    bench, build_lut, run_pipeline, BenchConfig, LutSource, PairsOptions, PipelineConfig, PsfLut,
    BATCH_FRAMES, STREAMING_FRAMES,
};
use gimbal_deblur::psf_analytic::{
    average_kernels, center_and_corners, psf_grid, synthesize_psf, CameraIntrinsics, GimbalMotion,
    PsfSynthesisConfig,
};
use gimbal_deblur::psf_estimate::{
    build_pair_dataset, estimate_kernel, estimate_kernel_traced, DatasetOptions, EstimationConfig,
    KernelInit, Manifest, PairJob,
};
use gimbal_deblur::{Error, Kernel, Result};

#[derive(Parser)]
#[command(
    name = "gimbal-deblur",
    version,
    about = "PSF-aware deblurring for yaw-panning gimbal cameras"
)]
#[command(args_override_self = true)]
struct Cli {
    /// Flat `key = value` file supplying defaults for long options.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads; defaults to the number of logical CPUs.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Repeat for more detail.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the PSF of a steering rate from camera intrinsics.
    PsfAnalytic(PsfAnalyticArgs),
    /// Estimate a PSF from a blur-sharp pair or a pair manifest.
    PsfEstimate(PsfEstimateArgs),
    /// Average slow-pan frames into blur-sharp pairs.
    MakePairs(MakePairsArgs),
    /// Build a steering-rate PSF lookup table.
    BuildLut(BuildLutArgs),
    /// Deblur one image.
    Deblur(DeblurArgs),
    /// Deblur every frame of a directory in parallel.
    Run(RunArgs),
    /// Time the deblurring methods on synthetic frames.
    Bench(BenchArgs),
    /// PSNR/SSIM report for a manifest of deblurred and reference images.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Clone)]
struct CameraArgs {
    /// Diagonal field of view in degrees.
    #[arg(long, default_value_t = 8.0)]
    fov: f64,
    #[arg(long, default_value_t = 558)]
    width: usize,
    #[arg(long, default_value_t = 481)]
    height: usize,
    /// Exposure time in seconds.
    #[arg(long, default_value_t = 0.005)]
    exposure: f64,
    #[arg(long, default_value_t = 30.0)]
    frame_rate: f64,
}

impl CameraArgs {
    fn intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::from_fov(self.fov, self.width, self.height)
    }

    fn motion(&self, rate: f64) -> Result<GimbalMotion> {
        GimbalMotion::new(rate, self.exposure, self.frame_rate)
    }
}

#[derive(Args)]
struct PsfAnalyticArgs {
    /// Steering rate in deg/s.
    #[arg(long)]
    rate: f64,
    #[command(flatten)]
    camera: CameraArgs,
    /// Pixel `x,y` whose PSF is computed; defaults to the center.
    #[arg(long, value_parser = parse_point)]
    anchor: Option<(f64, f64)>,
    /// Average the PSFs of the center and the four corners.
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 4)]
    oversample: usize,
    /// Kernel text file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EstimationArgs {
    #[arg(long, default_value_t = 21)]
    kernel_size: usize,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// uniform or delta.
    #[arg(long, default_value = "uniform")]
    init: String,
}

impl EstimationArgs {
    fn config(&self) -> Result<EstimationConfig> {
        let cfg = EstimationConfig {
            kernel_size: self.kernel_size,
            max_iters: self.max_iters,
            tol: self.tol,
            init: self.init.parse::<KernelInit>()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PsfEstimateArgs {
    #[arg(long, requires = "sharp", conflicts_with = "manifest")]
    blurred: Option<PathBuf>,
    #[arg(long, requires = "blurred")]
    sharp: Option<PathBuf>,
    /// Pair manifest written by make-pairs; the kernels of its pairs are averaged.
    #[arg(long, required_unless_present = "blurred")]
    manifest: Option<PathBuf>,
    /// Only use manifest pairs of this steering rate.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = 8)]
    max_pairs: usize,
    #[command(flatten)]
    estimation: EstimationArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MakePairsArgs {
    /// Directory of numbered slow-pan frames.
    #[arg(long)]
    frames: PathBuf,
    /// Steering rates to emulate, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    #[arg(long, default_value_t = 0.005)]
    exposure: f64,
    #[arg(long, default_value_t = 30.0)]
    frame_rate: f64,
    /// Window start spacing; defaults to non-overlapping windows.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, default_value_t = 16, value_parser = parse_depth)]
    bit_depth: u8,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BuildLutArgs {
    /// analytic or pairs.
    #[arg(long, default_value = "analytic")]
    mode: String,
    #[arg(long, value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    #[command(flatten)]
    camera: CameraArgs,
    /// Slow-pan frame directory for pairs mode.
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long)]
    camera_id: Option<String>,
    #[arg(long, default_value_t = 8)]
    max_pairs: usize,
    #[arg(long, default_value_t = 4)]
    oversample: usize,
    #[command(flatten)]
    estimation: EstimationArgs,
    /// LUT directory.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// wiener, rl or hyperlap.
    #[arg(long, default_value = "wiener")]
    method: String,
    /// Wiener noise-to-signal ratio.
    #[arg(long)]
    nsr: Option<f64>,
    /// Richardson-Lucy iterations.
    #[arg(long)]
    rl_iters: Option<usize>,
    /// Hyper-Laplacian data weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Hyper-Laplacian exponent.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    no_edgetaper: bool,
}

impl MethodArgs {
    fn config_for(&self, method: Method) -> Result<DeblurConfig> {
        let params = match method {
            Method::Wiener => MethodParams::Wiener(WienerParams {
                nsr: self.nsr.unwrap_or(WienerParams::default().nsr),
                ..WienerParams::default()
            }),
            Method::Rl => MethodParams::Rl(RlParams {
                iterations: self.rl_iters.unwrap_or(RlParams::default().iterations),
                ..RlParams::default()
            }),
            Method::Hyperlap => {
                let d = HyperLapParams::default();
                MethodParams::Hyperlap(HyperLapParams {
                    lambda: self.lambda.unwrap_or(d.lambda),
                    p: self.p.unwrap_or(d.p),
                    ..d
                })
            }
        };
        params.validate()?;
        let mut cfg = DeblurConfig::new(params);
        if self.no_edgetaper {
            cfg.edge_taper = None;
        }
        Ok(cfg)
    }

    fn config(&self) -> Result<DeblurConfig> {
        self.config_for(self.method.parse()?)
    }
}

#[derive(Args)]
struct KernelSourceArgs {
    /// Kernel text file.
    #[arg(long, conflicts_with = "lut")]
    psf: Option<PathBuf>,
    /// LUT directory; needs --rate.
    #[arg(long, requires = "rate")]
    lut: Option<PathBuf>,
    /// Steering rate in deg/s.
    #[arg(long)]
    rate: Option<f64>,
}

impl KernelSourceArgs {
    fn kernel(&self) -> Result<Option<Kernel>> {
        match (&self.psf, &self.lut, self.rate) {
            (Some(p), _, _) => Kernel::load(p).map(Some),
            (None, Some(dir), Some(rate)) => PsfLut::load(dir)?.get(rate).cloned().map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Args)]
struct DeblurArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    kernel: KernelSourceArgs,
    #[command(flatten)]
    method: MethodArgs,
    /// JSON file receiving {frame, method, ms}.
    #[arg(long)]
    timing_report: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Frame directory.
    #[arg(long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    lut: PathBuf,
    /// Steering rate in deg/s for frames the sidecar does not list.
    #[arg(long)]
    rate: f64,
    /// JSON object {frame number: rate}.
    #[arg(long)]
    rates_sidecar: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
    /// JSON timing report.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 16, value_parser = parse_depth)]
    bit_depth: u8,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    kernel: KernelSourceArgs,
    #[command(flatten)]
    camera: CameraArgs,
    /// Methods to time, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "wiener,rl,hyperlap")]
    methods: Vec<String>,
    #[command(flatten)]
    params: BenchParams,
    #[arg(long, default_value_t = STREAMING_FRAMES)]
    streaming_frames: usize,
    #[arg(long, default_value_t = BATCH_FRAMES)]
    batch_frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; the table is also printed.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BenchParams {
    #[arg(long)]
    nsr: Option<f64>,
    #[arg(long)]
    rl_iters: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    no_edgetaper: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// JSON lines of {pair_id, method, deblurred, reference}.
    #[arg(long)]
    manifest: PathBuf,
    /// CSV of extra scores keyed by pair_id,method to merge into the report.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok((p(x)?, p(y)?))
}

fn parse_depth(s: &str) -> std::result::Result<u8, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err("bit depth must be 8 or 16".into()),
    }
}

fn depth(bits: u8) -> BitDepth {
    if bits == 8 {
        BitDepth::Eight
    } else {
        BitDepth::Sixteen
    }
}

/// Inserts `--key value` pairs from the `--config` file right after the
/// subcommand name, so options given on the command line (which come later
/// and override) win.
fn merge_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let strs: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=").map(str::to_owned).or_else(|| {
            (a == "--config")
                .then(|| strs.get(i + 1).cloned())
                .flatten()
        })
    });
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let cmd = Cli::command();
    let Some((pos, sub)) = strs
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| cmd.find_subcommand(a).map(|s| (i, s)))
    else {
        return Ok(args);
    };
    let known = |c: &clap::Command, key: &str| {
        c.get_arguments()
            .find(|a| a.get_long() == Some(key))
            .map(|a| matches!(a.get_action(), ArgAction::SetTrue | ArgAction::Count))
    };
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key = value", n + 1))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim().trim_matches('"'));
        if key == "config" {
            continue;
        }
        let is_flag = match known(sub, &key).or_else(|| known(&cmd, &key)) {
            Some(f) => f,
            None if cmd.get_subcommands().any(|s| known(s, &key).is_some()) => continue,
            None => return Err(format!("{path}:{}: unknown option `{key}`", n + 1)),
        };
        if is_flag {
            if matches!(value, "true" | "1" | "yes") {
                extra.push(format!("--{key}"));
            }
        } else {
            extra.push(format!("--{key}"));
            extra.push(value.to_owned());
        }
    }
    let mut out: Vec<OsString> = args[..=pos].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::UnknownMethod(_) => 2,
        Error::LutMiss { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let args = match merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        eprintln!("error: --workers must be >= 1");
        return ExitCode::from(2);
    }
    // Only fails if a global pool already exists.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();

    match dispatch(cli.command, workers) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(command: Command, workers: usize) -> Result<()> {
    match command {
        Command::PsfAnalytic(a) => psf_analytic(a),
        Command::PsfEstimate(a) => psf_estimate(a),
        Command::MakePairs(a) => make_pairs(a),
        Command::BuildLut(a) => build_lut_cmd(a),
        Command::Deblur(a) => deblur_cmd(a),
        Command::Run(a) => run_cmd(a, workers),
        Command::Bench(a) => bench_cmd(a, workers),
        Command::Evaluate(a) => evaluate(a),
    }
}

fn emit_kernel(k: &Kernel, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => k.save(p),
        None => {
            print!("{}", k.to_text());
            Ok(())
        }
    }
}

fn psf_analytic(a: PsfAnalyticArgs) -> Result<()> {
    let intr = a.camera.intrinsics()?;
    let motion = a.camera.motion(a.rate)?;
    let cfg = PsfSynthesisConfig {
        anchor: a.anchor,
        oversample: a.oversample,
        max_spread_override: None,
    };
    let k = if a.grid {
        psf_grid(&intr, &motion, &center_and_corners(&intr), &cfg)?
    } else {
        synthesize_psf(&intr, &motion, &cfg)?
    };
    log::info!(
        "{}x{} kernel, support {} px",
        k.width(),
        k.height(),
        k.horizontal_support()
    );
    emit_kernel(&k, a.output.as_deref())
}

fn psf_estimate(a: PsfEstimateArgs) -> Result<()> {
    let cfg = a.estimation.config()?;
    let k = if let (Some(b), Some(s)) = (&a.blurred, &a.sharp) {
        let report = estimate_kernel_traced(&load_image(b)?, &load_image(s)?, &cfg)?;
        log::info!(
            "{} iterations, residual {:.3e}, converged: {}",
            report.residuals.len().saturating_sub(1),
            report.residuals.last().copied().unwrap_or(0.0),
            report.converged
        );
        report.kernel
    } else {
        let path = a.manifest.as_ref().expect("clap requires --manifest");
        let manifest = Manifest::read_jsonl(path)?;
        let pairs: Vec<_> = manifest
            .pairs
            .iter()
            .filter(|p| {
                a.rate
                    .map_or(true, |r| (p.steering_rate_deg_s - r).abs() < 0.05)
            })
            .take(a.max_pairs.max(1))
            .collect();
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}: no matching pairs",
                path.display()
            )));
        }
        let kernels = pairs
            .par_iter()
            .map(|p| {
                estimate_kernel(
                    &load_image(&p.blur_path)?,
                    &load_image(&p.sharp_path)?,
                    &cfg,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        log::info!("averaged {} pair kernels", kernels.len());
        average_kernels(&kernels)?
    };
    emit_kernel(&k, a.output.as_deref())
}

fn make_pairs(a: MakePairsArgs) -> Result<()> {
    let jobs = a
        .rates
        .iter()
        .map(|&r| GimbalMotion::new(r, a.exposure, a.frame_rate).map(|m| PairJob::from_motion(&m)))
        .collect::<Result<Vec<_>>>()?;
    let opts = DatasetOptions {
        stride: a.stride,
        bit_depth: depth(a.bit_depth),
    };
    let manifest = build_pair_dataset(&a.frames, &jobs, &a.output, &opts)?;
    println!(
        "{} pairs, {} warnings",
        manifest.pairs.len(),
        manifest.warnings.len()
    );
    Ok(())
}

fn build_lut_cmd(a: BuildLutArgs) -> Result<()> {
    let intr = a.camera.intrinsics()?;
    let motions = a
        .rates
        .iter()
        .map(|&r| a.camera.motion(r))
        .collect::<Result<Vec<_>>>()?;
    let source = match a.mode.as_str() {
        "analytic" => LutSource::Analytic(PsfSynthesisConfig {
            oversample: a.oversample,
            ..PsfSynthesisConfig::default()
        }),
        "pairs" => {
            let frames = a
                .frames
                .clone()
                .ok_or_else(|| Error::InvalidArgument("pairs mode needs --frames".into()))?;
            let mut opts = PairsOptions::new(frames);
            opts.estimation = a.estimation.config()?;
            opts.max_pairs = a.max_pairs;
            LutSource::Pairs(opts)
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown LUT mode `{other}` (expected analytic or pairs)"
            )))
        }
    };
    let mut build = build_lut(&intr, &motions, &source)?;
    if let Some(id) = a.camera_id {
        let mut lut = PsfLut::new(id);
        for (rate, e) in build.lut.iter() {
            lut.insert(rate, e.kernel.clone(), e.provenance)?;
        }
        build.lut = lut;
    }
    build.lut.save(&a.output)?;
    let log_path = a.output.join("build.log");
    let mut text = build.log.join("\n");
    text.push('\n');
    std::fs::write(&log_path, text).map_err(|e| Error::Io {
        path: log_path.clone(),
        source: e,
    })?;
    println!(
        "{} entries written to {}",
        build.lut.len(),
        a.output.display()
    );
    Ok(())
}

fn deblur_cmd(a: DeblurArgs) -> Result<()> {
    let kernel = a
        .kernel
        .kernel()?
        .ok_or_else(|| Error::InvalidArgument("deblur needs --psf or --lut with --rate".into()))?;
    let cfg = a.method.config()?;
    let blurred = load_image(&a.input)?;
    let name = a
        .input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (out, timing) = deblur_timed(&blurred, &kernel, &cfg, &name)?;
    save_image(&out, &a.output)?;
    log::info!("{} in {:.1} ms", timing.method, timing.ms);
    if let Some(path) = a.timing_report {
        let json = serde_json::to_string_pretty(&timing).expect("timing serializes");
        std::fs::write(&path, json).map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(())
}

fn run_cmd(a: RunArgs, workers: usize) -> Result<()> {
    let lut = PsfLut::load(&a.lut)?;
    let mut cfg = PipelineConfig::new(&a.input, &a.output, a.rate);
    cfg.workers = workers;
    cfg.deblur = a.method.config()?;
    cfg.rate_sidecar = a.rates_sidecar;
    cfg.report_path = a.report;
    cfg.bit_depth = depth(a.bit_depth);
    let report = run_pipeline(&cfg, &lut)?;
    println!(
        "{} frames, {} skipped, {:.1} fps, {:.1} ms/frame ({} workers)",
        report.frames.len(),
        report.failures.len(),
        report.fps,
        report.mean_ms_per_frame,
        report.workers
    );
    Ok(())
}

fn bench_cmd(a: BenchArgs, workers: usize) -> Result<()> {
    let kernel = match a.kernel.kernel()? {
        Some(k) => k,
        None => {
            let rate = a.kernel.rate.unwrap_or(60.0);
            synthesize_psf(
                &a.camera.intrinsics()?,
                &a.camera.motion(rate)?,
                &PsfSynthesisConfig::default(),
            )?
        }
    };
    let margs = MethodArgs {
        method: String::new(),
        nsr: a.params.nsr,
        rl_iters: a.params.rl_iters,
        lambda: a.params.lambda,
        p: a.params.p,
        no_edgetaper: a.params.no_edgetaper,
    };
    let methods = a
        .methods
        .iter()
        .map(|m| margs.config_for(m.parse()?))
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = BenchConfig::new(methods, kernel);
    cfg.width = a.camera.width;
    cfg.height = a.camera.height;
    cfg.workers = workers;
    cfg.streaming_frames = a.streaming_frames;
    cfg.batch_frames = a.batch_frames;
    cfg.seed = a.seed;
    let report = bench(&cfg)?;
    println!(
        "{:<9} {:<10} {:>6} {:>8} {:>12} {:>9}",
        "method", "protocol", "frames", "workers", "ms/frame", "fps"
    );
    for r in &report.rows {
        println!(
            "{:<9} {:<10} {:>6} {:>8} {:>12.2} {:>9.1}",
            r.method.as_str(),
            r.protocol,
            r.frames,
            r.workers,
            r.ms_per_frame,
            r.fps
        );
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(p) = a.output {
        report.write_csv(&p)?;
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let pairs = read_eval_manifest(&a.manifest)?;
    let rows = evaluate_pairs(&pairs, &SsimConfig::default())?;
    let external = a
        .external
        .as_deref()
        .map(ExternalScores::load)
        .transpose()?;
    write_eval_csv(&rows, external.as_ref(), &a.output)?;
    println!("{} rows written to {}", rows.len(), a.output.display());
    Ok(())
}
