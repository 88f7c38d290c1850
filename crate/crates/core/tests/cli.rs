mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;
use gimbal_deblur::Kernel;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gimbal-deblur"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn psf_analytic_prints_kernel_text() {
    let out = cli(&["psf-analytic", "--rate", "60"]);
    assert!(out.status.success());
    let k = Kernel::parse_text(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(k, reference_kernel(60.0));
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["psf-analytic"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("in.pgm");
    gimbal_deblur::io::save_image(&scene(40, 32, 1), &img).unwrap();
    let psf = dir.path().join("k.txt");
    Kernel::uniform(5, 1).unwrap().save(&psf).unwrap();
    let out = dir.path().join("out.pgm");
    let bad_method = cli(&[
        "deblur",
        "--input",
        p(&img),
        "-o",
        p(&out),
        "--psf",
        p(&psf),
        "--method",
        "lucy",
    ]);
    assert_eq!(bad_method.status.code(), Some(2));
    let missing = cli(&[
        "deblur",
        "--input",
        p(&dir.path().join("nope.pgm")),
        "-o",
        p(&out),
        "--psf",
        p(&psf),
    ]);
    assert_eq!(missing.status.code(), Some(3));

    let lut = dir.path().join("lut");
    assert!(cli(&["build-lut", "--rates", "30,60", "-o", p(&lut)])
        .status
        .success());
    let miss = cli(&[
        "deblur",
        "--input",
        p(&img),
        "-o",
        p(&out),
        "--lut",
        p(&lut),
        "--rate",
        "25",
    ]);
    assert_eq!(miss.status.code(), Some(4));
    assert!(!out.exists());
}

#[test]
fn deblur_writes_image_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("frame_0007.pgm");
    let (_, blurred) = blurred_crop(64, 48, &reference_kernel(40.0), 2);
    gimbal_deblur::io::save_image(&blurred, &img).unwrap();
    let psf = dir.path().join("k.txt");
    assert!(cli(&["psf-analytic", "--rate", "40", "-o", p(&psf)])
        .status
        .success());
    let out = dir.path().join("out.png");
    let timing = dir.path().join("t.json");
    let status = cli(&[
        "deblur",
        "--input",
        p(&img),
        "-o",
        p(&out),
        "--psf",
        p(&psf),
        "--method",
        "rl",
        "--rl-iters",
        "5",
        "--timing-report",
        p(&timing),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert_eq!(
        gimbal_deblur::io::load_image(&out).unwrap().dims(),
        (64, 48)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(timing).unwrap()).unwrap();
    assert_eq!(json["frame"], "frame_0007.pgm");
    assert_eq!(json["method"], "rl");
    assert!(json["ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_supplies_defaults_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# camera\nrate = 20\nfov = 8\nworkers = 2\nmethod = hyperlap\n",
    )
    .unwrap();
    let from_file = cli(&["--config", p(&cfg), "psf-analytic"]);
    assert!(
        from_file.status.success(),
        "{}",
        String::from_utf8_lossy(&from_file.stderr)
    );
    let k = Kernel::parse_text(&String::from_utf8(from_file.stdout).unwrap()).unwrap();
    assert_eq!(k, reference_kernel(20.0));

    let overridden = cli(&["--config", p(&cfg), "psf-analytic", "--rate", "50"]);
    let k = Kernel::parse_text(&String::from_utf8(overridden.stdout).unwrap()).unwrap();
    assert_eq!(k, reference_kernel(50.0));

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(
        cli(&["--config", p(&cfg), "psf-analytic", "--rate", "5"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn pairs_lut_run_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    fs::create_dir(&frames).unwrap();
    write_pan_sequence(&frames, 80, 64, 12, 9);

    let pairs = dir.path().join("pairs");
    let status = cli(&[
        "make-pairs",
        "--frames",
        p(&frames),
        "--rates",
        "30,120",
        "-o",
        p(&pairs),
    ]);
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).starts_with("2 pairs, 1 warnings"));
    let psf = dir.path().join("est.txt");
    let est = cli(&[
        "psf-estimate",
        "--manifest",
        p(&pairs.join("manifest.jsonl")),
        "--rate",
        "30",
        "--kernel-size",
        "9",
        "-o",
        p(&psf),
    ]);
    assert!(
        est.status.success(),
        "{}",
        String::from_utf8_lossy(&est.stderr)
    );
    let ncc = Kernel::load(&psf)
        .unwrap()
        .normalized_cross_correlation(&Kernel::uniform(5, 1).unwrap());
    assert!(ncc >= 0.95, "{ncc}");

    let lut = dir.path().join("lut");
    let build = cli(&[
        "build-lut",
        "--mode",
        "pairs",
        "--frames",
        p(&frames),
        "--rates",
        "30,120",
        "--kernel-size",
        "9",
        "--camera-id",
        "bench-cam",
        "-o",
        p(&lut),
    ]);
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let log = fs::read_to_string(lut.join("build.log")).unwrap();
    assert!(log.contains("120 deg/s: omitted"));
    let index = fs::read_to_string(lut.join("index.json")).unwrap();
    assert!(index.contains("bench-cam") && index.contains("blur-sharp-pair"));

    let blurred = dir.path().join("blurred");
    fs::create_dir(&blurred).unwrap();
    for r in gimbal_deblur::psf_estimate::Manifest::read_jsonl(&pairs.join("manifest.jsonl"))
        .unwrap()
        .pairs
    {
        let name = Path::new(&r.blur_path).file_name().unwrap().to_owned();
        fs::copy(&r.blur_path, blurred.join(name)).unwrap();
    }
    let out = dir.path().join("out");
    let report = dir.path().join("report.json");
    let run = cli(&[
        "run",
        "--workers",
        "2",
        "--input",
        p(&blurred),
        "-o",
        p(&out),
        "--lut",
        p(&lut),
        "--rate",
        "30",
        "--report",
        p(&report),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["workers"], 2);
    assert_eq!(json["frames"].as_array().unwrap().len(), 2);

    let manifest = dir.path().join("eval.jsonl");
    fs::write(
        &manifest,
        format!(
            "{{\"pair_id\":\"0\",\"method\":\"wiener\",\"deblurred\":\"{}\",\"reference\":\"{}\"}}\n",
            p(&out.join("blur_00000.pgm")),
            p(&pairs.join("sr30").join("sharp_00000.pgm"))
        ),
    )
    .unwrap();
    let external = dir.path().join("niqe.csv");
    fs::write(&external, "pair_id,method,niqe\n0,wiener,4.2\n").unwrap();
    let csv = dir.path().join("eval.csv");
    let eval = cli(&[
        "evaluate",
        "--manifest",
        p(&manifest),
        "--external",
        p(&external),
        "-o",
        p(&csv),
    ]);
    assert!(
        eval.status.success(),
        "{}",
        String::from_utf8_lossy(&eval.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert!(
        text.starts_with("pair_id,method,psnr_db,ssim,niqe\n0,wiener,"),
        "{text}"
    );
    assert!(text.trim_end().ends_with(",4.2"));
}

#[test]
fn bench_prints_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = cli(&[
        "bench",
        "--width",
        "64",
        "--height",
        "48",
        "--streaming-frames",
        "2",
        "--batch-frames",
        "3",
        "--workers",
        "1",
        "-o",
        p(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 7);
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 7);
}
