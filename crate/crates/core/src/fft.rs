//! Two-dimensional complex FFT helpers on row-major buffers.
//!
//! Plans are cached in a thread-local planner, so every worker thread keeps
//! its own plans and scratch space.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::image::GrayImage;
use crate::kernel::Kernel;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Smallest `m >= n` whose only prime factors are 2, 3, 5 and 7.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], width: usize, height: usize) {
    const BLOCK: usize = 32;
    for by in (0..height).step_by(BLOCK) {
        for bx in (0..width).step_by(BLOCK) {
            for y in by..(by + BLOCK).min(height) {
                for x in bx..(bx + BLOCK).min(width) {
                    dst[x * height + y] = src[y * width + x];
                }
            }
        }
    }
}

fn transform(data: &mut [Complex64], width: usize, height: usize, direction: FftDirection) {
    assert_eq!(data.len(), width * height);
    let row = plan(width, direction);
    let col = plan(height, direction);
    let mut scratch = vec![
        Complex64::default();
        row.get_inplace_scratch_len()
            .max(col.get_inplace_scratch_len())
    ];
    row.process_with_scratch(data, &mut scratch[..row.get_inplace_scratch_len()]);
    let mut t = vec![Complex64::default(); data.len()];
    transpose(data, &mut t, width, height);
    col.process_with_scratch(&mut t, &mut scratch[..col.get_inplace_scratch_len()]);
    transpose(&t, data, height, width);
}

/// In-place forward DFT (unnormalized).
pub fn fft2(data: &mut [Complex64], width: usize, height: usize) {
    transform(data, width, height, FftDirection::Forward);
}

/// In-place inverse DFT, scaled by `1 / (width * height)`.
pub fn ifft2(data: &mut [Complex64], width: usize, height: usize) {
    transform(data, width, height, FftDirection::Inverse);
    let scale = 1.0 / (width * height) as f64;
    data.iter_mut().for_each(|v| *v *= scale);
}

pub fn forward_real(values: &[f64], width: usize, height: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, width, height);
    buf
}

pub fn inverse_real(mut spectrum: Vec<Complex64>, width: usize, height: usize) -> Vec<f64> {
    ifft2(&mut spectrum, width, height);
    spectrum.into_iter().map(|c| c.re).collect()
}

pub fn image_spectrum(image: &GrayImage) -> Vec<Complex64> {
    forward_real(image.data(), image.width(), image.height())
}

/// Spectra of two real arrays from a single complex transform of `a + i b`.
pub fn forward_real_pair(
    a: &[f64],
    b: &[f64],
    width: usize,
    height: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    assert_eq!(a.len(), b.len());
    let mut z: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    fft2(&mut z, width, height);
    let mut sa = Vec::with_capacity(z.len());
    let mut sb = Vec::with_capacity(z.len());
    for y in 0..height {
        let my = (height - y) % height;
        for x in 0..width {
            let mx = (width - x) % width;
            let p = z[y * width + x];
            let q = z[my * width + mx].conj();
            sa.push((p + q) * 0.5);
            sb.push(Complex64::new(0.0, -0.5) * (p - q));
        }
    }
    (sa, sb)
}

/// `kernel` on a `width`x`height` periodic canvas with its anchor at the
/// origin.
pub fn wrap_kernel(kernel: &Kernel, width: usize, height: usize) -> Vec<f64> {
    assert!(kernel.width() <= width && kernel.height() <= height);
    let mut buf = vec![0.0; width * height];
    let (rx, ry) = (kernel.radius_x() as isize, kernel.radius_y() as isize);
    for ky in 0..kernel.height() {
        let y = (ky as isize - ry).rem_euclid(height as isize) as usize;
        for kx in 0..kernel.width() {
            let x = (kx as isize - rx).rem_euclid(width as isize) as usize;
            buf[y * width + x] += kernel.get(kx, ky);
        }
    }
    buf
}

/// Optical transfer function of `kernel` on a `width`x`height` periodic
/// canvas: the kernel anchor is placed at the origin and wrapped.
pub fn otf(kernel: &Kernel, width: usize, height: usize) -> Vec<Complex64> {
    forward_real(&wrap_kernel(kernel, width, height), width, height)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_transform_matches_separate() {
        let (w, h) = (6, 5);
        let a: Vec<f64> = (0..w * h).map(|i| ((i * 7) % 11) as f64).collect();
        let b: Vec<f64> = (0..w * h).map(|i| ((i * 5) % 13) as f64 - 4.0).collect();
        let (sa, sb) = forward_real_pair(&a, &b, w, h);
        for (p, q) in sa.iter().zip(forward_real(&a, w, h)) {
            assert!((p - q).norm() < 1e-9);
        }
        for (p, q) in sb.iter().zip(forward_real(&b, w, h)) {
            assert!((p - q).norm() < 1e-9);
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(1), 1);
        assert_eq!(next_smooth(11), 12);
        assert_eq!(next_smooth(481), 486);
        assert_eq!(next_smooth(558), 560);
        assert_eq!(next_smooth(97), 98);
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let vals: Vec<f64> = (0..35).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let back = inverse_real(forward_real(&vals, 7, 5), 7, 5);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft() {
        let (w, h) = (6, 4);
        let vals: Vec<f64> = (0..w * h).map(|i| (i as f64 * 0.37).sin()).collect();
        let fast = forward_real(&vals, w, h);
        for v in 0..h {
            for u in 0..w {
                let mut acc = Complex64::default();
                for y in 0..h {
                    for x in 0..w {
                        let ph = -2.0
                            * std::f64::consts::PI
                            * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                        acc += Complex64::from_polar(vals[y * w + x], ph);
                    }
                }
                assert!((acc - fast[v * w + u]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn otf_of_normalized_kernel_has_unit_dc() {
        let k = Kernel::gaussian(5, 1.0).unwrap();
        let o = otf(&k, 16, 8);
        assert!((o[0].re - 1.0).abs() < 1e-12 && o[0].im.abs() < 1e-12);
    }
}
