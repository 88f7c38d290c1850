//! Kernel estimation from blur-sharp image pairs.
//!
//! The kernel minimizes `||B - L * k||^2` over the interior of the frame
//! (where the convolution needs no boundary model) subject to `k >= 0` and
//! `sum(k) = 1`. The solver runs conjugate gradient inside the zero-sum
//! subspace of the currently free weights; a step that would leave the
//! feasible set is either clipped and renormalized or truncated at the
//! boundary, whichever gives the lower residual, and CG restarts.

mod dataset;

pub use dataset::{
    build_pair_dataset, pair_windows, DatasetOptions, Manifest, ManifestWarning, PairJob,
    PairRecord,
};

use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::image::GrayImage;
use crate::kernel::Kernel;
use crate::psf_analytic::GimbalMotion;

/// Number of slow-pan (1 deg/s) frames whose average matches the blur of
/// `motion`: `round(frame_rate * exposure * steering_rate)`, halves rounded
/// up, never below one.
pub fn frames_for_steering(motion: &GimbalMotion) -> usize {
    let n = motion.frame_rate * motion.exposure_s * motion.steering_rate_deg_s;
    // The epsilon keeps exact halves (7.5 at 50 deg/s) rounding up despite
    // representation error in the product.
    ((n + 0.5 + 1e-9).floor() as usize).max(1)
}

/// How many consecutive frames form one blurred frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSpec {
    n: usize,
}

impl PairSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("frame count must be >= 1"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based index of the frame used as the sharp image: `(N + 1) / 2` for
    /// odd `N`, `N / 2 + 1` for even `N`.
    pub fn center_index(&self) -> usize {
        self.n / 2 + 1
    }
}

/// Averages `frames` into the blurred image and returns it with the center
/// frame as the sharp image.
pub fn average_frames(frames: &[GrayImage], spec: PairSpec) -> Result<(GrayImage, GrayImage)> {
    if frames.len() != spec.n() {
        return Err(Error::invalid(format!(
            "expected {} frames, got {}",
            spec.n(),
            frames.len()
        )));
    }
    let first = &frames[0];
    let mut acc = vec![0.0; first.len()];
    for f in frames {
        first.ensure_same_dims(f)?;
        acc.iter_mut().zip(f.data()).for_each(|(a, v)| *a += v);
    }
    let n = frames.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    let blurred = GrayImage::new(first.width(), first.height(), acc)?;
    Ok((blurred, frames[spec.center_index() - 1].clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelInit {
    #[default]
    Uniform,
    Delta,
}

impl FromStr for KernelInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(KernelInit::Uniform),
            "delta" => Ok(KernelInit::Delta),
            other => Err(Error::invalid(format!("unknown kernel init `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    /// Odd side length of the square kernel.
    pub kernel_size: usize,
    pub max_iters: usize,
    /// Stop once a CG step lowers the squared residual by less than this
    /// fraction.
    pub tol: f64,
    pub init: KernelInit,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            kernel_size: 21,
            max_iters: 100,
            tol: 1e-6,
            init: KernelInit::Uniform,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Result of [`estimate_kernel_traced`].
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub kernel: Kernel,
    /// Interior residual `||B - L * k||_2` of the initial guess followed by
    /// one entry per accepted iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

pub fn estimate_kernel(
    blurred: &GrayImage,
    sharp: &GrayImage,
    cfg: &EstimationConfig,
) -> Result<Kernel> {
    estimate_kernel_traced(blurred, sharp, cfg).map(|r| r.kernel)
}

/// Convolution with the sharp image restricted to the interior, as a linear
/// map from kernel weights to residual samples, plus its adjoint.
struct PairOperator {
    width: usize,
    height: usize,
    canvas_w: usize,
    canvas_h: usize,
    size: usize,
    sharp_hat: Vec<Complex64>,
}

impl PairOperator {
    fn new(sharp: &GrayImage, size: usize) -> Self {
        let (w, h) = sharp.dims();
        let (cw, ch) = (fft::next_smooth(w), fft::next_smooth(h));
        let mut canvas = vec![0.0; cw * ch];
        for y in 0..h {
            canvas[y * cw..y * cw + w].copy_from_slice(sharp.row(y));
        }
        Self {
            width: w,
            height: h,
            canvas_w: cw,
            canvas_h: ch,
            size,
            sharp_hat: fft::forward_real(&canvas, cw, ch),
        }
    }

    fn radius(&self) -> usize {
        self.size / 2
    }

    fn interior(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let r = self.radius();
        (r..self.width - r, r..self.height - r)
    }

    fn interior_len(&self) -> usize {
        let (xs, ys) = self.interior();
        xs.len() * ys.len()
    }

    fn lag_index(&self, kx: usize, ky: usize) -> usize {
        let r = self.radius() as isize;
        let x = (kx as isize - r).rem_euclid(self.canvas_w as isize) as usize;
        let y = (ky as isize - r).rem_euclid(self.canvas_h as isize) as usize;
        y * self.canvas_w + x
    }

    fn interior_of(&self, img: &GrayImage) -> Vec<f64> {
        let (xs, ys) = self.interior();
        ys.flat_map(|y| img.row(y)[xs.clone()].to_vec()).collect()
    }

    /// Interior samples of `L * k`.
    fn forward(&self, k: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex64::default(); self.canvas_w * self.canvas_h];
        for ky in 0..self.size {
            for kx in 0..self.size {
                buf[self.lag_index(kx, ky)].re = k[ky * self.size + kx];
            }
        }
        fft::fft2(&mut buf, self.canvas_w, self.canvas_h);
        buf.iter_mut()
            .zip(&self.sharp_hat)
            .for_each(|(a, b)| *a *= b);
        fft::ifft2(&mut buf, self.canvas_w, self.canvas_h);
        let (xs, ys) = self.interior();
        ys.flat_map(|y| xs.clone().map(move |x| (x, y)))
            .map(|(x, y)| buf[y * self.canvas_w + x].re)
            .collect()
    }

    /// Adjoint of [`forward`]: correlation of the interior residual with `L`
    /// at every kernel lag.
    fn adjoint(&self, r: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex64::default(); self.canvas_w * self.canvas_h];
        let (xs, ys) = self.interior();
        let mut it = r.iter();
        for y in ys {
            for x in xs.clone() {
                buf[y * self.canvas_w + x].re = *it.next().unwrap();
            }
        }
        fft::fft2(&mut buf, self.canvas_w, self.canvas_h);
        buf.iter_mut()
            .zip(&self.sharp_hat)
            .for_each(|(a, b)| *a *= b.conj());
        fft::ifft2(&mut buf, self.canvas_w, self.canvas_h);
        let mut g = vec![0.0; self.size * self.size];
        for ky in 0..self.size {
            for kx in 0..self.size {
                g[ky * self.size + kx] = buf[self.lag_index(kx, ky)].re;
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gradient_energy(img: &GrayImage) -> f64 {
    let (w, h) = img.dims();
    let mut e = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = img.get(x, y);
            if x + 1 < w {
                e += (img.get(x + 1, y) - v).powi(2);
            }
            if y + 1 < h {
                e += (img.get(x, y + 1) - v).powi(2);
            }
        }
    }
    e
}

/// Free weights are those above zero plus zero weights the gradient would
/// raise; returns the mask and the mean gradient over it.
fn free_set(k: &[f64], g: &[f64]) -> (Vec<bool>, f64) {
    let mean_over = |mask: &[bool]| {
        let (s, n) = mask
            .iter()
            .zip(g)
            .filter(|(m, _)| **m)
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        if n == 0 {
            0.0
        } else {
            s / n as f64
        }
    };
    let mut mask: Vec<bool> = k.iter().map(|&v| v > 0.0).collect();
    let mu = mean_over(&mask);
    for i in 0..k.len() {
        if !mask[i] && g[i] < mu {
            mask[i] = true;
        }
    }
    let mu = mean_over(&mask);
    (mask, mu)
}

/// Same as [`estimate_kernel`] but also returns the residual history.
pub fn estimate_kernel_traced(
    blurred: &GrayImage,
    sharp: &GrayImage,
    cfg: &EstimationConfig,
) -> Result<EstimationReport> {
    cfg.validate()?;
    blurred.ensure_same_dims(sharp)?;
    let (w, h) = sharp.dims();
    if cfg.kernel_size > w.min(h) {
        return Err(Error::KernelTooLarge {
            kernel_w: cfg.kernel_size,
            kernel_h: cfg.kernel_size,
            image_w: w,
            image_h: h,
        });
    }
    if gradient_energy(sharp) <= 1e-12 * sharp.len() as f64 {
        return Err(Error::IllPosed(
            "sharp image has no gradient energy; the kernel is unobservable".into(),
        ));
    }

    let size = cfg.kernel_size;
    let n = size * size;
    let op = PairOperator::new(sharp, size);
    let target = op.interior_of(blurred);
    debug_assert_eq!(target.len(), op.interior_len());

    let mut k = match cfg.init {
        KernelInit::Uniform => vec![1.0 / n as f64; n],
        KernelInit::Delta => {
            let mut v = vec![0.0; n];
            v[n / 2] = 1.0;
            v
        }
    };
    let residual_of = |k: &[f64]| -> Vec<f64> {
        op.forward(k)
            .iter()
            .zip(&target)
            .map(|(a, b)| a - b)
            .collect()
    };
    let mut res = residual_of(&k);
    let mut f = 0.5 * dot(&res, &res);
    let mut g = op.adjoint(&res);
    let mut residuals = vec![(2.0 * f).sqrt()];

    let mut dir = vec![0.0; n];
    let mut prev_pg_sq = 0.0;
    let mut prev_mask: Option<Vec<bool>> = None;
    let mut converged = false;

    for _ in 0..cfg.max_iters {
        if f == 0.0 {
            converged = true;
            break;
        }
        let (mask, mu) = free_set(&k, &g);
        let pg: Vec<f64> = g
            .iter()
            .zip(&mask)
            .map(|(&gi, &m)| if m { gi - mu } else { 0.0 })
            .collect();
        let pg_sq = dot(&pg, &pg);
        if pg_sq <= 1e-30 {
            converged = true;
            break;
        }
        let restart = prev_mask.as_ref() != Some(&mask);
        if restart {
            dir.iter_mut().zip(&pg).for_each(|(d, p)| *d = -p);
        } else {
            let beta = pg_sq / prev_pg_sq;
            dir.iter_mut()
                .zip(&pg)
                .for_each(|(d, p)| *d = -p + beta * *d);
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir.iter_mut().zip(&pg).for_each(|(d, p)| *d = -p);
            slope = -pg_sq;
        }
        let a_dir = op.forward(&dir);
        let curvature = dot(&a_dir, &a_dir);
        if curvature <= 0.0 {
            converged = true;
            break;
        }
        let step = -slope / curvature;
        let bound = k
            .iter()
            .zip(&dir)
            .filter(|(_, &d)| d < 0.0)
            .map(|(&ki, &d)| ki / -d)
            .fold(f64::INFINITY, f64::min);

        let f_old = f;
        let mut hit_bound = false;
        if step <= bound {
            k.iter_mut().zip(&dir).for_each(|(ki, d)| *ki += step * d);
            res.iter_mut().zip(&a_dir).for_each(|(r, a)| *r += step * a);
            prev_mask = Some(mask);
        } else {
            hit_bound = true;
            // Full step, then clip negatives and renormalize.
            let mut clipped: Vec<f64> = k
                .iter()
                .zip(&dir)
                .map(|(ki, d)| (ki + step * d).max(0.0))
                .collect();
            let s: f64 = clipped.iter().sum();
            clipped.iter_mut().for_each(|v| *v /= s);
            let clipped_res = residual_of(&clipped);
            let f_clipped = 0.5 * dot(&clipped_res, &clipped_res);
            // Truncated step: exact objective along the line.
            let f_bound = f + bound * slope + 0.5 * bound * bound * curvature;
            if f_clipped <= f_bound {
                k = clipped;
                res = clipped_res;
            } else {
                k.iter_mut()
                    .zip(&dir)
                    .for_each(|(ki, d)| *ki = (*ki + bound * d).max(0.0));
                let s: f64 = k.iter().sum();
                k.iter_mut().for_each(|v| *v /= s);
                res = residual_of(&k);
            }
            prev_mask = None;
        }
        prev_pg_sq = pg_sq;
        f = 0.5 * dot(&res, &res);
        g = op.adjoint(&res);
        residuals.push((2.0 * f).sqrt());
        if !hit_bound && (f_old - f) <= cfg.tol * f_old {
            converged = true;
            break;
        }
    }

    Ok(EstimationReport {
        kernel: Kernel::from_weights(size, size, k)?,
        residuals,
        converged,
    })
}
