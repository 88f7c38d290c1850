//! Spatial and frequency-domain convolution with explicit edge handling.

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::image::GrayImage;
use crate::kernel::Kernel;

/// How samples outside the image are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Repeat the nearest edge sample.
    Replicate,
    /// Mirror about the edge, repeating the edge sample (`c b a | a b c`).
    #[default]
    Symmetric,
    /// Wrap around.
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replicate" => Ok(Boundary::Replicate),
            "symmetric" => Ok(Boundary::Symmetric),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::invalid(format!("unknown boundary mode `{other}`"))),
        }
    }
}

impl Boundary {
    /// Maps a possibly out-of-range coordinate onto `0..n`.
    #[inline]
    pub fn index(self, i: isize, n: usize) -> usize {
        let n = n as isize;
        if (0..n).contains(&i) {
            return i as usize;
        }
        match self {
            Boundary::Replicate => i.clamp(0, n - 1) as usize,
            Boundary::Periodic => i.rem_euclid(n) as usize,
            Boundary::Symmetric => {
                let m = i.rem_euclid(2 * n);
                (if m < n { m } else { 2 * n - 1 - m }) as usize
            }
        }
    }
}

fn check_fits(image: &GrayImage, kernel: &Kernel) -> Result<()> {
    if kernel.width() > image.width() || kernel.height() > image.height() {
        return Err(Error::KernelTooLarge {
            kernel_w: kernel.width(),
            kernel_h: kernel.height(),
            image_w: image.width(),
            image_h: image.height(),
        });
    }
    Ok(())
}

/// Kernel area above which [`convolve`] switches to the FFT path.
const FFT_THRESHOLD: usize = 49;

/// Convolves `image` with `kernel`, picking the direct or FFT path by
/// kernel size. Both paths agree to round-off.
pub fn convolve(image: &GrayImage, kernel: &Kernel, boundary: Boundary) -> Result<GrayImage> {
    if kernel.width() * kernel.height() > FFT_THRESHOLD {
        convolve_fft(image, kernel, boundary)
    } else {
        convolve_direct(image, kernel, boundary)
    }
}

/// Nested-loop convolution: `out(p) = sum_d k(d) * in(p - d)`.
pub fn convolve_direct(
    image: &GrayImage,
    kernel: &Kernel,
    boundary: Boundary,
) -> Result<GrayImage> {
    check_fits(image, kernel)?;
    if kernel.is_delta() {
        return Ok(image.clone());
    }
    let (w, h) = image.dims();
    let (rx, ry) = (kernel.radius_x() as isize, kernel.radius_y() as isize);
    // Precompute the source index for every (pixel, tap) pair along each axis.
    let xs: Vec<Vec<usize>> = (0..w as isize)
        .map(|x| {
            (0..kernel.width() as isize)
                .map(|kx| boundary.index(x - (kx - rx), w))
                .collect()
        })
        .collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for ky in 0..kernel.height() {
            let sy = boundary.index(y - (ky as isize - ry), h);
            let src = image.row(sy);
            let taps = &kernel.weights()[ky * kernel.width()..(ky + 1) * kernel.width()];
            let dst = &mut out[y as usize * w..(y as usize + 1) * w];
            for (x, d) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (t, &sx) in taps.iter().zip(&xs[x]) {
                    acc += t * src[sx];
                }
                *d += acc;
            }
        }
    }
    Ok(GrayImage::from_raw(w, h, out))
}

/// FFT convolution. Periodic mode transforms at the exact image size; the
/// other modes extend the image by the kernel radius, convolve on a smooth
/// padded canvas and crop.
pub fn convolve_fft(image: &GrayImage, kernel: &Kernel, boundary: Boundary) -> Result<GrayImage> {
    check_fits(image, kernel)?;
    if kernel.is_delta() {
        return Ok(image.clone());
    }
    if boundary == Boundary::Periodic {
        let (w, h) = image.dims();
        return Ok(GrayImage::from_raw(
            w,
            h,
            circular_convolve(image.data(), w, h, kernel),
        ));
    }
    let (rx, ry) = (kernel.radius_x(), kernel.radius_y());
    let pw = fft::next_smooth(image.width() + 2 * rx);
    let ph = fft::next_smooth(image.height() + 2 * ry);
    let padded = pad(
        image,
        rx,
        pw - image.width() - rx,
        ry,
        ph - image.height() - ry,
        boundary,
    );
    let full = circular_convolve(padded.data(), pw, ph, kernel);
    let full = GrayImage::from_raw(pw, ph, full);
    full.crop(rx, ry, image.width(), image.height())
}

pub(crate) fn circular_convolve(data: &[f64], w: usize, h: usize, kernel: &Kernel) -> Vec<f64> {
    let k = fft::otf(kernel, w, h);
    let mut s = fft::forward_real(data, w, h);
    s.iter_mut().zip(&k).for_each(|(a, b)| *a *= b);
    fft::inverse_real(s, w, h)
}

/// Multiplies the spectrum of `data` by `spectrum` (conjugated when
/// `conjugate`, which turns convolution into correlation).
pub(crate) fn apply_spectrum(
    data: &[f64],
    w: usize,
    h: usize,
    spectrum: &[Complex64],
    conjugate: bool,
) -> Vec<f64> {
    let mut s = fft::forward_real(data, w, h);
    if conjugate {
        s.iter_mut().zip(spectrum).for_each(|(a, b)| *a *= b.conj());
    } else {
        s.iter_mut().zip(spectrum).for_each(|(a, b)| *a *= b);
    }
    fft::inverse_real(s, w, h)
}

/// Extends `image` by the given margins using `boundary` to fill samples.
pub fn pad(
    image: &GrayImage,
    left: usize,
    right: usize,
    top: usize,
    bottom: usize,
    boundary: Boundary,
) -> GrayImage {
    let (w, h) = image.dims();
    let (nw, nh) = (w + left + right, h + top + bottom);
    let xs: Vec<usize> = (0..nw)
        .map(|x| boundary.index(x as isize - left as isize, w))
        .collect();
    let mut data = Vec::with_capacity(nw * nh);
    for y in 0..nh {
        let row = image.row(boundary.index(y as isize - top as isize, h));
        data.extend(xs.iter().map(|&sx| row[sx]));
    }
    GrayImage::from_raw(nw, nh, data)
}
