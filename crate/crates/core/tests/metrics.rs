mod common;

use common::*;
use gimbal_deblur::io::save_image;
use gimbal_deblur::metrics::{
    evaluate_pairs, psnr, read_eval_manifest, ssim, write_eval_csv, EvalPair, SsimConfig,
};
use gimbal_deblur::GrayImage;
use proptest::prelude::*;

fn mse_oracle(a: &GrayImage, b: &GrayImage) -> f64 {
    let mut s = 0.0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            s += (a.get(x, y) - b.get(x, y)).powi(2);
        }
    }
    s / a.len() as f64
}

/// Sliding-window SSIM with an explicit 2-D Gaussian window per position.
fn ssim_oracle(a: &GrayImage, b: &GrayImage) -> f64 {
    let (n, sigma) = (11usize, 1.5f64);
    let mut win = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let (dx, dy) = (i as f64 - 5.0, j as f64 - 5.0);
            win[j * n + i] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = win.iter().sum();
    win.iter_mut().for_each(|v| *v /= total);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut sum = 0.0;
    let mut count = 0;
    for y0 in 0..=a.height() - n {
        for x0 in 0..=a.width() - n {
            let (mut ma, mut mb) = (0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    ma += win[j * n + i] * a.get(x0 + i, y0 + j);
                    mb += win[j * n + i] * b.get(x0 + i, y0 + j);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let (da, db) = (a.get(x0 + i, y0 + j) - ma, b.get(x0 + i, y0 + j) - mb);
                    va += win[j * n + i] * da * da;
                    vb += win[j * n + i] * db * db;
                    cov += win[j * n + i] * da * db;
                }
            }
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}

#[test]
fn psnr_matches_double_loop() {
    let a = noise_image(40, 30, 1);
    let b = noise_image(40, 30, 2);
    let expected = 10.0 * (1.0 / mse_oracle(&a, &b)).log10();
    assert!((psnr(&a, &b).unwrap() - expected).abs() <= 1e-9);
}

#[test]
fn ssim_matches_sliding_window() {
    let a = scene(32, 32, 3);
    let b = noise_image(32, 32, 4)
        .zip_map(&a, |n, s| 0.8 * s + 0.2 * n)
        .unwrap();
    let got = ssim(&a, &b, &SsimConfig::default()).unwrap();
    assert!((got - ssim_oracle(&a, &b)).abs() <= 1e-6, "{got}");
}

#[test]
fn ssim_sign_flips_for_inverted_structure() {
    let r = scene(48, 48, 5);
    let inv = r.map(|v| 1.0 - v).unwrap();
    assert!(ssim(&inv, &r, &SsimConfig::default()).unwrap() < 0.0);
}

#[test]
fn evaluate_manifest_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let reference = scene(24, 24, 6);
    let noisy = noise_image(24, 24, 7)
        .zip_map(&reference, |n, s| 0.9 * s + 0.1 * n)
        .unwrap();
    save_image(&reference, dir.path().join("ref.pgm")).unwrap();
    save_image(&noisy, dir.path().join("out.pgm")).unwrap();
    let lines = [
        EvalPair {
            pair_id: "0".into(),
            method: "wiener".into(),
            deblurred: "out.pgm".into(),
            reference: "ref.pgm".into(),
        },
        EvalPair {
            pair_id: "1".into(),
            method: "rl".into(),
            deblurred: "ref.pgm".into(),
            reference: "ref.pgm".into(),
        },
    ];
    let manifest = dir.path().join("eval.jsonl");
    let text: Vec<String> = lines
        .iter()
        .map(|p| serde_json::to_string(p).unwrap())
        .collect();
    std::fs::write(&manifest, text.join("\n")).unwrap();

    let pairs = read_eval_manifest(&manifest).unwrap();
    let rows = evaluate_pairs(&pairs, &SsimConfig::default()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].psnr_db.is_finite() && rows[0].ssim < 1.0);
    assert_eq!(rows[1].psnr_db, f64::INFINITY);
    assert_eq!(rows[1].ssim, 1.0);

    let csv_path = dir.path().join("report.csv");
    write_eval_csv(&rows, None, &csv_path).unwrap();
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("pair_id,method,psnr_db,ssim\n0,wiener,"));
}

proptest! {
    #![proptest_config(proptest_config(24))]

    #[test]
    fn metrics_are_symmetric(s1 in 0u64..1000, s2 in 0u64..1000) {
        let a = noise_image(16, 16, s1);
        let b = noise_image(16, 16, s2);
        let cfg = SsimConfig::default();
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert_eq!(ssim(&a, &b, &cfg).unwrap(), ssim(&b, &a, &cfg).unwrap());
        prop_assert_eq!(ssim(&a, &a, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn psnr_ignores_common_offset(seed in 0u64..1000, c in -0.5f64..0.5) {
        let a = noise_image(16, 16, seed);
        let b = noise_image(16, 16, seed + 7);
        let (a2, b2) = (a.map(|v| v + c).unwrap(), b.map(|v| v + c).unwrap());
        prop_assert!((psnr(&a, &b).unwrap() - psnr(&a2, &b2).unwrap()).abs() <= 1e-9);
    }
}
