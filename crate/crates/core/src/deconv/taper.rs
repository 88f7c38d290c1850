//! Edge tapering: blend each border toward a blurred copy so the frame is
//! close to periodic before frequency-domain deconvolution.

use crate::convolve::{convolve, Boundary};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::kernel::Kernel;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTaperSpec {
    pub taper_kernel: Kernel,
}

/// Default taper: 31x31 Gaussian with sigma 10.
pub const DEFAULT_TAPER_SIZE: usize = 31;
pub const DEFAULT_TAPER_SIGMA: f64 = 10.0;

impl Default for EdgeTaperSpec {
    fn default() -> Self {
        Self {
            taper_kernel: Kernel::gaussian(DEFAULT_TAPER_SIZE, DEFAULT_TAPER_SIGMA)
                .expect("valid default taper"),
        }
    }
}

/// Circular autocorrelation of `profile` (placed at the start of a length-`n`
/// line), normalized to 1 at lag 0.
fn taper_profile(profile: &[f64], n: usize) -> Vec<f64> {
    let mut line = vec![0.0; n];
    line[..profile.len()].copy_from_slice(profile);
    let ac: Vec<f64> = (0..n)
        .map(|lag| (0..n).map(|j| line[j] * line[(j + lag) % n]).sum())
        .collect();
    let peak = ac[0];
    ac.into_iter().map(|v| v / peak).collect()
}

/// Per-pixel weight of the original image: `(1 - beta_x(x)) * (1 - beta_y(y))`.
/// Exactly 1 outside a band of `kernel size` pixels along each border.
pub fn taper_weights(width: usize, height: usize, kernel: &Kernel) -> Vec<f64> {
    let col_profile: Vec<f64> = (0..kernel.width())
        .map(|x| (0..kernel.height()).map(|y| kernel.get(x, y)).sum())
        .collect();
    let row_profile: Vec<f64> = (0..kernel.height())
        .map(|y| (0..kernel.width()).map(|x| kernel.get(x, y)).sum())
        .collect();
    let bx = taper_profile(&col_profile, width);
    let by = taper_profile(&row_profile, height);
    let mut w = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            w.push((1.0 - bx[x]) * (1.0 - by[y]));
        }
    }
    w
}

pub fn edge_taper(image: &GrayImage, spec: &EdgeTaperSpec) -> Result<GrayImage> {
    let k = &spec.taper_kernel;
    let (w, h) = image.dims();
    if w <= k.width() || h <= k.height() {
        return Err(Error::invalid(format!(
            "{w}x{h} image is not larger than the {}x{} taper kernel",
            k.width(),
            k.height()
        )));
    }
    let weights = taper_weights(w, h, k);
    let blurred = match separable_factors(k) {
        Some((kx, ky)) => separable_band_blur(image, &kx, &ky, &weights),
        None => convolve(image, k, Boundary::Periodic)?.into_data(),
    };
    let data = image
        .data()
        .iter()
        .zip(&blurred)
        .zip(&weights)
        .map(|((&i, &b), &wt)| {
            if wt == 1.0 {
                i
            } else {
                wt * i + (1.0 - wt) * b
            }
        })
        .collect();
    GrayImage::new(w, h, data)
}

/// Column and row profiles of `k` when `k` is their outer product.
fn separable_factors(k: &Kernel) -> Option<(Vec<f64>, Vec<f64>)> {
    let (kw, kh) = (k.width(), k.height());
    let px: Vec<f64> = (0..kw)
        .map(|x| (0..kh).map(|y| k.get(x, y)).sum())
        .collect();
    let py: Vec<f64> = (0..kh)
        .map(|y| (0..kw).map(|x| k.get(x, y)).sum())
        .collect();
    let peak = k.weights().iter().fold(0.0f64, |m, &v| m.max(v));
    let separable =
        (0..kh).all(|y| (0..kw).all(|x| (k.get(x, y) - px[x] * py[y]).abs() <= 1e-12 * peak));
    separable.then_some((px, py))
}

/// Periodic blur by the separable kernel `kx (x) ky`, evaluated only where
/// `weights < 1`; other entries are 0.
fn separable_band_blur(image: &GrayImage, kx: &[f64], ky: &[f64], weights: &[f64]) -> Vec<f64> {
    let (w, h) = image.dims();
    let (rx, ry) = (kx.len() / 2, ky.len() / 2);
    // Correlation taps: out(x) = sum_i taps[i] * line(x + i - r).
    let tx: Vec<f64> = kx.iter().rev().copied().collect();
    let ty: Vec<f64> = ky.iter().rev().copied().collect();
    let mut rows = vec![0.0; w * h];
    let mut line = vec![0.0; w + tx.len()];
    for y in 0..h {
        let src = image.row(y);
        for (j, v) in line.iter_mut().enumerate() {
            *v = src[(j + w - rx) % w];
        }
        for (x, out) in rows[y * w..(y + 1) * w].iter_mut().enumerate() {
            *out = dot(&tx, &line[x..x + tx.len()]);
        }
    }
    let mut out = vec![0.0; w * h];
    let mut col = vec![0.0; h + ty.len()];
    for x in 0..w {
        for (j, v) in col.iter_mut().enumerate() {
            *v = rows[((j + h - ry) % h) * w + x];
        }
        for y in 0..h {
            if weights[y * w + x] < 1.0 {
                out[y * w + x] = dot(&ty, &col[y..y + ty.len()]);
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_plateau_and_edges() {
        let k = Kernel::gaussian(5, 1.0).unwrap();
        let w = taper_weights(20, 12, &k);
        for y in 0..12 {
            for x in 0..20 {
                let v = w[y * 20 + x];
                assert!((0.0..=1.0).contains(&v));
                if (5..15).contains(&x) && (5..7).contains(&y) {
                    assert_eq!(v, 1.0);
                }
                if x == 0 || y == 0 {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_unchanged_and_small_rejected() {
        let img = GrayImage::filled(40, 40, 0.3).unwrap();
        let j = edge_taper(&img, &EdgeTaperSpec::default()).unwrap();
        assert!(j.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
        let small = GrayImage::filled(31, 40, 0.3).unwrap();
        assert!(edge_taper(&small, &EdgeTaperSpec::default()).is_err());
    }
}
