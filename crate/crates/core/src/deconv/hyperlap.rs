//! Non-blind deconvolution with a hyper-Laplacian gradient prior, solved by
//! half-quadratic splitting.
//!
//! Objective: `lambda/2 ||k * x - b||^2 + sum |dx x|^p + |dy x|^p`. Each stage
//! fixes `beta`, solves the per-pixel problem
//! `min_w beta/2 (w - v)^2 + |w|^p` for both gradient fields, then the
//! quadratic image update in closed form in the frequency domain.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use super::{Canvas, EdgeTaperSpec};
use crate::convolve::Boundary;
use crate::error::{Error, Result};
use crate::fft;
use crate::image::GrayImage;
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperLapParams {
    pub lambda: f64,
    pub p: f64,
    pub beta_init: f64,
    pub beta_rate: f64,
    pub beta_max: f64,
    pub boundary: Boundary,
}

impl Default for HyperLapParams {
    fn default() -> Self {
        Self {
            lambda: 3000.0,
            p: 2.0 / 3.0,
            beta_init: 1.0,
            beta_rate: 2.0 * SQRT_2,
            beta_max: 256.0,
            boundary: Boundary::Symmetric,
        }
    }
}

impl HyperLapParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must be in (0, 1], got {}", self.p));
        }
        if !(self.beta_init > 0.0) {
            return bad(format!("beta_init must be > 0, got {}", self.beta_init));
        }
        if !(self.beta_rate > 1.0) {
            return bad(format!("beta_rate must be > 1, got {}", self.beta_rate));
        }
        if !(self.beta_max >= self.beta_init) || !self.beta_max.is_finite() {
            return bad(format!(
                "beta_max must be >= beta_init, got {}",
                self.beta_max
            ));
        }
        Ok(())
    }

    /// The continuation values of beta, one per stage.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut beta = self.beta_init;
        while beta <= self.beta_max * (1.0 + 1e-12) {
            out.push(beta);
            beta *= self.beta_rate;
        }
        out
    }
}

fn cbrt_sum(a: f64, d: f64) -> f64 {
    let s = d.sqrt();
    (a + s).cbrt() + (a - s).cbrt()
}

/// Largest real root of `t^3 + a t + b = 0` (a < 0 or one real root).
fn largest_cubic_root(a: f64, b: f64) -> f64 {
    let disc = b * b / 4.0 + a * a * a / 27.0;
    if disc >= 0.0 {
        cbrt_sum(-b / 2.0, disc)
    } else {
        let r = 2.0 * (-a / 3.0).sqrt();
        let arg = ((3.0 * b) / (2.0 * a) * (-3.0 / a).sqrt()).clamp(-1.0, 1.0);
        r * (arg.acos() / 3.0).cos()
    }
}

fn shrink_cost(w: f64, v: f64, beta: f64, p: f64) -> f64 {
    0.5 * beta * (w - v) * (w - v) + w.abs().powf(p)
}

/// Nonzero stationary candidate for `v > 0`, if any.
fn positive_candidate(v: f64, beta: f64, p: f64) -> Option<f64> {
    if (p - 2.0 / 3.0).abs() < 1e-12 {
        // w = t^3: t^4 - v t + 2/(3 beta) = 0, solved by Ferrari's method.
        let c = 2.0 / (3.0 * beta);
        let m = largest_cubic_root(-c, -v * v / 8.0);
        if m <= 0.0 {
            return None;
        }
        let s = (2.0 * m).sqrt();
        let disc = -2.0 * m + 2.0 * v / s;
        if disc < 0.0 {
            return None;
        }
        let t = (s + disc.sqrt()) / 2.0;
        Some(t * t * t)
    } else if (p - 0.5).abs() < 1e-12 {
        // w = t^2: t^3 - v t + 1/(2 beta) = 0.
        let q = 1.0 / (2.0 * beta);
        if q * q / 4.0 - v * v * v / 27.0 > 0.0 {
            return None;
        }
        let t = largest_cubic_root(-v, q);
        (t > 0.0).then_some(t * t)
    } else {
        // g(w) = beta (w - v) + p w^(p-1) is convex on w > 0 with its minimum at w_c.
        let g = |w: f64| beta * (w - v) + p * w.powf(p - 1.0);
        let wc = (p * (1.0 - p) / beta).powf(1.0 / (2.0 - p));
        if wc >= v || g(wc) > 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (wc, v);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// `argmin_w beta/2 (w - v)^2 + |w|^p`.
pub fn shrink(v: f64, beta: f64, p: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let a = v.abs();
    if p == 1.0 {
        return v.signum() * (a - 1.0 / beta).max(0.0);
    }
    match positive_candidate(a, beta, p) {
        Some(w) if shrink_cost(w, a, beta, p) < shrink_cost(0.0, a, beta, p) => v.signum() * w,
        _ => 0.0,
    }
}

/// Per-stage record of [`hyperlap_deblur_traced`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperLapStage {
    pub beta: f64,
    /// Split objective after the shrinkage step.
    pub split_after_w: f64,
    /// Split objective after the image update.
    pub split_after_x: f64,
    /// Unsplit objective at the stage output.
    pub objective: f64,
}

/// Forward differences with wrap-around: `x(i+1) - x(i)` along each axis.
fn gradients(x: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; x.len()];
    for r in 0..h {
        let rn = (r + 1) % h;
        for c in 0..w {
            let cn = (c + 1) % w;
            gx[r * w + c] = x[r * w + cn] - x[r * w + c];
            gy[r * w + c] = x[rn * w + c] - x[r * w + c];
        }
    }
    (gx, gy)
}

struct Problem {
    w: usize,
    h: usize,
    lambda: f64,
    p: f64,
    b: Vec<f64>,
    k_hat: Vec<Complex64>,
    dx_hat: Vec<Complex64>,
    dy_hat: Vec<Complex64>,
    /// `lambda conj(K) B`, constant across stages.
    data_rhs: Vec<Complex64>,
}

impl Problem {
    fn data_term(&self, x: &[f64]) -> f64 {
        let mut s = fft::forward_real(x, self.w, self.h);
        s.iter_mut().zip(&self.k_hat).for_each(|(a, k)| *a *= k);
        let kx = fft::inverse_real(s, self.w, self.h);
        0.5 * self.lambda
            * kx.iter()
                .zip(&self.b)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let (gx, gy) = gradients(x, self.w, self.h);
        let prior: f64 = gx.iter().chain(&gy).map(|g| g.abs().powf(self.p)).sum();
        self.data_term(x) + prior
    }

    fn split(&self, x: &[f64], wx: &[f64], wy: &[f64], beta: f64) -> f64 {
        let (gx, gy) = gradients(x, self.w, self.h);
        let coupling: f64 = gx
            .iter()
            .zip(wx)
            .chain(gy.iter().zip(wy))
            .map(|(g, w)| (w - g) * (w - g))
            .sum();
        let prior: f64 = wx.iter().chain(wy).map(|w| w.abs().powf(self.p)).sum();
        self.data_term(x) + 0.5 * beta * coupling + prior
    }

    /// `argmin_x lambda/2 ||k*x - b||^2 + beta/2 ||w - grad x||^2`.
    fn image_update(&self, wx: &[f64], wy: &[f64], beta: f64) -> Vec<f64> {
        let wx_hat = fft::forward_real(wx, self.w, self.h);
        let wy_hat = fft::forward_real(wy, self.w, self.h);
        let mut out = Vec::with_capacity(wx_hat.len());
        for i in 0..wx_hat.len() {
            let (dx, dy, k) = (self.dx_hat[i], self.dy_hat[i], self.k_hat[i]);
            let num = beta * (dx.conj() * wx_hat[i] + dy.conj() * wy_hat[i]) + self.data_rhs[i];
            let den = beta * (dx.norm_sqr() + dy.norm_sqr()) + self.lambda * k.norm_sqr();
            // The difference filters vanish only at DC, where K = 1.
            out.push(num / den);
        }
        fft::inverse_real(out, self.w, self.h)
    }
}

fn difference_otf(w: usize, h: usize, horizontal: bool) -> Vec<Complex64> {
    let mut buf = vec![Complex64::default(); w * h];
    buf[0].re = -1.0;
    // x(i+1) - x(i) is correlation with [-1, 1]; as a convolution the +1 tap
    // sits at offset -1, which wraps to the last column/row.
    if horizontal {
        buf[w - 1].re += 1.0;
    } else {
        buf[(h - 1) * w].re += 1.0;
    }
    fft::fft2(&mut buf, w, h);
    buf
}

pub fn hyperlap_deblur(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &HyperLapParams,
) -> Result<GrayImage> {
    run(blurred, kernel, params, None, false).map(|(img, _)| img)
}

/// Same as [`hyperlap_deblur`], also returning one record per beta stage.
/// Objectives are evaluated on the padded working canvas.
pub fn hyperlap_deblur_traced(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &HyperLapParams,
) -> Result<(GrayImage, Vec<HyperLapStage>)> {
    run(blurred, kernel, params, None, true)
}

pub(super) fn run(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &HyperLapParams,
    taper: Option<&EdgeTaperSpec>,
    trace: bool,
) -> Result<(GrayImage, Vec<HyperLapStage>)> {
    params.validate()?;
    let (canvas, b) = Canvas::new(blurred, kernel, params.boundary, taper)?;
    let (w, h) = (canvas.cw, canvas.ch);
    let k_hat = fft::otf(kernel, w, h);
    let b_hat = fft::forward_real(&b, w, h);
    let data_rhs = k_hat
        .iter()
        .zip(&b_hat)
        .map(|(k, bh)| params.lambda * k.conj() * bh)
        .collect();
    let prob = Problem {
        w,
        h,
        lambda: params.lambda,
        p: params.p,
        b,
        k_hat,
        dx_hat: difference_otf(w, h, true),
        dy_hat: difference_otf(w, h, false),
        data_rhs,
    };

    let mut x = prob.b.clone();
    let mut stages = Vec::new();
    for beta in params.schedule() {
        let (gx, gy) = gradients(&x, w, h);
        let wx: Vec<f64> = gx.iter().map(|&v| shrink(v, beta, params.p)).collect();
        let wy: Vec<f64> = gy.iter().map(|&v| shrink(v, beta, params.p)).collect();
        if !trace {
            x = prob.image_update(&wx, &wy, beta);
            continue;
        }
        let split_after_w = prob.split(&x, &wx, &wy, beta);
        x = prob.image_update(&wx, &wy, beta);
        stages.push(HyperLapStage {
            beta,
            split_after_w,
            split_after_x: prob.split(&x, &wx, &wy, beta),
            objective: prob.objective(&x),
        });
    }
    Ok((canvas.crop(x), stages))
}
