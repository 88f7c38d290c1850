use super::{Canvas, EdgeTaperSpec};
use crate::convolve::{apply_spectrum, Boundary};
use crate::error::{Error, Result};
use crate::fft;
use crate::image::GrayImage;
use crate::kernel::Kernel;

/// Floor for the predicted image in the ratio `B / (L * k)`.
pub const RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RlParams {
    pub iterations: usize,
    pub boundary: Boundary,
}

impl Default for RlParams {
    fn default() -> Self {
        Self {
            iterations: 20,
            boundary: Boundary::Symmetric,
        }
    }
}

impl RlParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("RL needs at least one iteration"));
        }
        Ok(())
    }
}

pub fn rl_deblur(blurred: &GrayImage, kernel: &Kernel, params: &RlParams) -> Result<GrayImage> {
    rl_deblur_with(blurred, kernel, params, |_, _| {})
}

/// Richardson-Lucy, starting from the clipped input. `observe(t, estimate)`
/// runs after every iteration with the estimate on the padded working canvas
/// (equal to the image for periodic boundaries).
pub fn rl_deblur_with(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &RlParams,
    observe: impl FnMut(usize, &[f64]),
) -> Result<GrayImage> {
    run(blurred, kernel, params, None, observe)
}

pub(super) fn run(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &RlParams,
    taper: Option<&EdgeTaperSpec>,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<GrayImage> {
    params.validate()?;
    let clipped = if blurred.min() < 0.0 {
        log::warn!("RL input has negative samples; clipping to 0");
        blurred.map(|v| v.max(0.0))?
    } else {
        blurred.clone()
    };
    let (canvas, b) = Canvas::new(&clipped, kernel, params.boundary, taper)?;
    if kernel.is_delta() {
        for t in 1..=params.iterations {
            observe(t, &b);
        }
        return Ok(canvas.crop(b));
    }
    let k_hat = fft::otf(kernel, canvas.cw, canvas.ch);
    let mut est = b.clone();
    for t in 1..=params.iterations {
        let predicted = apply_spectrum(&est, canvas.cw, canvas.ch, &k_hat, false);
        let ratio: Vec<f64> = b
            .iter()
            .zip(&predicted)
            .map(|(&bv, &p)| bv / p.max(RATIO_FLOOR))
            .collect();
        let correction = apply_spectrum(&ratio, canvas.cw, canvas.ch, &k_hat, true);
        est.iter_mut()
            .zip(&correction)
            .for_each(|(e, c)| *e = (*e * c).max(0.0));
        observe(t, &est);
    }
    Ok(canvas.crop(est))
}
