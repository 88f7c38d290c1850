#![allow(dead_code)]

use gimbal_deblur::psf_analytic::{
    anchor_rotations, synthesize_psf, CameraIntrinsics, GimbalMotion, PsfSynthesisConfig,
};
use gimbal_deblur::{convolve, fft, Boundary, GrayImage, Kernel};
use nalgebra::{Matrix3, Vector3};
use proptest::test_runner::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn proptest_config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    }
}

/// Equal mix of [`shapes`] and a Gaussian field with a `1/f` amplitude
/// spectrum, the usual model for natural image statistics.
pub fn scene(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let white: Vec<f64> = (0..w * h).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut spec = fft::forward_real(&white, w, h);
    let floor = 1.0 / w.max(h) as f64;
    for v in 0..h {
        for u in 0..w {
            let fu = u.min(w - u) as f64 / w as f64;
            let fv = v.min(h - v) as f64 / h as f64;
            spec[v * w + u] /= fu.hypot(fv).max(floor);
        }
    }
    let field = fft::inverse_real(spec, w, h);
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    let sd = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / field.len() as f64).sqrt();
    let base = shapes(w, h, seed);
    let data = field
        .iter()
        .zip(base.data())
        .map(|(f, b)| (0.5 * b + 0.5 * (0.5 + 0.12 * (f - mean) / sd)).clamp(0.0, 1.0))
        .collect();
    GrayImage::new(w, h, data).unwrap()
}

/// Piecewise-constant shapes over a gradient with fine texture.
pub fn shapes(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<f64> = (0..w * h)
        .map(|i| 0.3 + 0.2 * (i % w) as f64 / w as f64 + 0.1 * (i / w) as f64 / h as f64)
        .collect();
    for _ in 0..(w * h / 1500).max(8) {
        let (cx, cy) = (rng.gen_range(0..w) as f64, rng.gen_range(0..h) as f64);
        let v = rng.gen_range(0.1..0.9);
        if rng.gen_bool(0.5) {
            let (rw, rh) = (
                rng.gen_range(3.0..w as f64 / 6.0),
                rng.gen_range(3.0..h as f64 / 6.0),
            );
            for y in 0..h {
                for x in 0..w {
                    if (x as f64 - cx).abs() < rw && (y as f64 - cy).abs() < rh {
                        data[y * w + x] = v;
                    }
                }
            }
        } else {
            let r = rng.gen_range(2.0..w.min(h) as f64 / 8.0);
            for y in 0..h {
                for x in 0..w {
                    if (x as f64 - cx).hypot(y as f64 - cy) < r {
                        data[y * w + x] = v;
                    }
                }
            }
        }
    }
    for v in data.iter_mut() {
        *v = (*v + rng.gen_range(-0.04..0.04)).clamp(0.0, 1.0);
    }
    let img = GrayImage::new(w, h, data).unwrap();
    convolve(
        &img,
        &Kernel::gaussian(3, 0.6).unwrap(),
        Boundary::Symmetric,
    )
    .unwrap()
}

/// Uniform white noise in `[0, 1)`.
pub fn noise_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(w, h, |_, _| rng.gen::<f64>()).unwrap()
}

/// 558x481 camera with an 8 degree field of view.
pub fn reference_camera() -> CameraIntrinsics {
    CameraIntrinsics::from_fov(8.0, 558, 481).unwrap()
}

pub fn motion(rate: f64) -> GimbalMotion {
    GimbalMotion::new(rate, 0.005, 30.0).unwrap()
}

/// Center-pixel PSF of the reference camera at `rate` deg/s.
pub fn reference_kernel(rate: f64) -> Kernel {
    synthesize_psf(
        &reference_camera(),
        &motion(rate),
        &PsfSynthesisConfig::default(),
    )
    .unwrap()
}

pub fn rms(a: &GrayImage, b: &GrayImage) -> f64 {
    let s: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    (s / a.len() as f64).sqrt()
}

pub fn max_abs(a: &GrayImage, b: &GrayImage) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Naive 2-D DFT, `sum x(n) exp(-2 pi i k n / N)`.
pub fn naive_dft(data: &[f64], w: usize, h: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let a = -2.0
                        * std::f64::consts::PI
                        * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                    re += data[y * w + x] * a.cos();
                    im += data[y * w + x] * a.sin();
                }
            }
            out.push((re, im));
        }
    }
    out
}

/// A `w`x`h` blurred frame cut from a larger scene, so no boundary model is
/// exact; returns `(sharp, blurred)`.
pub fn blurred_crop(w: usize, h: usize, kernel: &Kernel, seed: u64) -> (GrayImage, GrayImage) {
    let m = kernel.width().max(kernel.height());
    let big = scene(w + 2 * m, h + 2 * m, seed);
    let sharp = big.crop(m, m, w, h).unwrap();
    let blurred = convolve(&big, kernel, Boundary::Replicate)
        .unwrap()
        .crop(m, m, w, h)
        .unwrap();
    (sharp, blurred)
}

/// Writes `count` frames of a scene panning right by one pixel per frame,
/// cropped from a wider scene so no frame wraps around.
pub fn write_pan_sequence(dir: &std::path::Path, w: usize, h: usize, count: usize, seed: u64) {
    let wide = scene(w + count, h, seed);
    for i in 0..count {
        let frame = wide.crop(count - 1 - i, 0, w, h).unwrap();
        gimbal_deblur::io::save_image(&frame, dir.join(format!("frame_{:04}.pgm", i + 1))).unwrap();
    }
}

/// Blurred 60 deg/s frames named `frame_0001.pgm`...
pub fn write_blurred_frames(dir: &std::path::Path, w: usize, h: usize, count: usize) {
    let k = reference_kernel(60.0);
    for i in 0..count {
        let (_, blurred) = blurred_crop(w, h, &k, 100 + i as u64);
        gimbal_deblur::io::save_image(&blurred, dir.join(format!("frame_{:04}.pgm", i + 1)))
            .unwrap();
    }
}

/// Dense warping oracle: render an ideal point at `anchor` through every
/// rotation by inverse-mapping each output pixel with bilinear sampling of
/// the impulse, then average. Returns a `side`x`side` window centred on the
/// anchor.
fn warp_oracle(
    intr: &CameraIntrinsics,
    thetas: &[f64],
    anchor: (f64, f64),
    side: usize,
) -> Vec<f64> {
    let f = intr.focal();
    let (cx, cy) = (intr.width() as f64 / 2.0, intr.height() as f64 / 2.0);
    let k = Matrix3::new(f, 0.0, cx, 0.0, f, cy, 0.0, 0.0, 1.0);
    let k_inv = k.try_inverse().unwrap();
    let r = (side / 2) as f64;
    let mut acc = vec![0.0; side * side];
    for &t in thetas {
        let rot = Matrix3::new(t.cos(), 0.0, t.sin(), 0.0, 1.0, 0.0, -t.sin(), 0.0, t.cos());
        let inv = (k * rot * k_inv).try_inverse().unwrap();
        for j in 0..side {
            for i in 0..side {
                let p = Vector3::new(anchor.0 + i as f64 - r, anchor.1 + j as f64 - r, 1.0);
                let q = inv * p;
                let (u, v) = (q.x / q.z - anchor.0, q.y / q.z - anchor.1);
                let wt = (1.0 - u.abs()).max(0.0) * (1.0 - v.abs()).max(0.0);
                acc[j * side + i] += wt;
            }
        }
    }
    let s: f64 = acc.iter().sum();
    acc.iter().map(|v| v / s).collect()
}

/// L1 distance between the synthesized PSF and [`warp_oracle`] on a common
/// window, plus the synthesized kernel.
pub fn l1_against_oracle(rate: f64, anchor: Option<(f64, f64)>) -> (f64, Kernel) {
    let intr = reference_camera();
    let cfg = PsfSynthesisConfig {
        anchor,
        ..PsfSynthesisConfig::default()
    };
    let k = synthesize_psf(&intr, &motion(rate), &cfg).unwrap();
    let thetas = anchor_rotations(&intr, &motion(rate), &cfg).unwrap();
    let side = k.width().max(k.height()) + 4;
    let oracle = warp_oracle(
        &intr,
        &thetas,
        anchor.unwrap_or_else(|| intr.center_pixel()),
        side,
    );
    let padded = k.padded_to(side, side).unwrap();
    let l1 = padded
        .weights()
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .sum();
    (l1, k)
}

/// Circular autocorrelation of a profile, by explicit lag loop.
fn oracle_beta(profile: &[f64], n: usize) -> Vec<f64> {
    let at = |i: usize| if i < profile.len() { profile[i] } else { 0.0 };
    let ac: Vec<f64> = (0..n)
        .map(|lag| (0..n).map(|j| at(j) * at((j + lag) % n)).sum::<f64>())
        .collect();
    ac.iter().map(|v| v / ac[0]).collect()
}

/// Edge-taper result by direct composition: explicit circular blur with
/// `k`, weights from [`oracle_beta`]. Returns `(tapered, blurred)`.
pub fn taper_oracle(img: &GrayImage, k: &Kernel) -> (GrayImage, GrayImage) {
    let (w, h) = img.dims();
    let (kw, kh) = (k.width(), k.height());
    let (rx, ry) = (k.radius_x() as isize, k.radius_y() as isize);
    let blurred = GrayImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for ky in 0..kh {
            for kx in 0..kw {
                let sx = (x as isize - (kx as isize - rx)).rem_euclid(w as isize) as usize;
                let sy = (y as isize - (ky as isize - ry)).rem_euclid(h as isize) as usize;
                acc += k.get(kx, ky) * img.get(sx, sy);
            }
        }
        acc
    })
    .unwrap();
    let px: Vec<f64> = (0..kw)
        .map(|x| (0..kh).map(|y| k.get(x, y)).sum())
        .collect();
    let py: Vec<f64> = (0..kh)
        .map(|y| (0..kw).map(|x| k.get(x, y)).sum())
        .collect();
    let (bx, by) = (oracle_beta(&px, w), oracle_beta(&py, h));
    let tapered = GrayImage::from_fn(w, h, |x, y| {
        let wt = (1.0 - bx[x]) * (1.0 - by[y]);
        wt * img.get(x, y) + (1.0 - wt) * blurred.get(x, y)
    })
    .unwrap();
    (tapered, blurred)
}

/// Largest per-bin deviation of `out`'s spectrum from
/// `conj(K) B / (|K|^2 + nsr)`, all spectra by naive DFT.
pub fn wiener_bin_error(b: &GrayImage, k: &Kernel, nsr: f64, out: &GrayImage) -> f64 {
    let (w, h) = b.dims();
    // Kernel anchor at the origin, wrapped.
    let mut kpad = vec![0.0; w * h];
    for ky in 0..k.height() {
        for kx in 0..k.width() {
            let x = (kx as isize - k.radius_x() as isize).rem_euclid(w as isize) as usize;
            let y = (ky as isize - k.radius_y() as isize).rem_euclid(h as isize) as usize;
            kpad[y * w + x] += k.get(kx, ky);
        }
    }
    let bs = naive_dft(b.data(), w, h);
    let ks = naive_dft(&kpad, w, h);
    let os = naive_dft(out.data(), w, h);
    let mut worst: f64 = 0.0;
    for i in 0..w * h {
        let ((br, bi), (kr, ki)) = (bs[i], ks[i]);
        let den = kr * kr + ki * ki + nsr;
        let er = (kr * br + ki * bi) / den;
        let ei = (kr * bi - ki * br) / den;
        worst = worst.max((os[i].0 - er).abs()).max((os[i].1 - ei).abs());
    }
    worst
}

pub fn shrink_cost(w: f64, v: f64, beta: f64, p: f64) -> f64 {
    0.5 * beta * (w - v).powi(2) + w.abs().powf(p)
}

/// Minimizer of [`shrink_cost`] over `[-1, 1]` on a 1e-5 grid.
pub fn shrink_grid_argmin(v: f64, beta: f64, p: f64) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for i in -100_000..=100_000 {
        let w = i as f64 * 1e-5;
        let c = shrink_cost(w, v, beta, p);
        if c < best.0 {
            best = (c, w);
        }
    }
    best.1
}
