use num_complex::Complex64;

use super::{Canvas, EdgeTaperSpec};
use crate::convolve::Boundary;
use crate::error::{Error, Result};
use crate::fft;
use crate::image::GrayImage;
use crate::kernel::Kernel;

/// Denominator floor for the per-frequency division.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerParams {
    /// Noise-to-signal power ratio; 0 is plain inverse filtering.
    pub nsr: f64,
    pub boundary: Boundary,
}

impl Default for WienerParams {
    fn default() -> Self {
        Self {
            nsr: 1e-2,
            boundary: Boundary::Symmetric,
        }
    }
}

impl WienerParams {
    /// `nsr = 10^(-snr_db / 10)`: the ratio of noise power to mean signal
    /// power. Natural images carry far less power at high frequencies than
    /// on average, so this under-regularizes; see the README.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            nsr: 10f64.powf(-snr_db / 10.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nsr >= 0.0 && self.nsr.is_finite()) {
            return Err(Error::invalid(format!(
                "nsr must be finite and >= 0, got {}",
                self.nsr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WienerOutput {
    pub image: GrayImage,
    /// Set when some frequency needed the denominator floor.
    pub unstable: bool,
}

pub fn wiener_deblur(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &WienerParams,
) -> Result<GrayImage> {
    wiener_deblur_diagnostics(blurred, kernel, params).map(|o| o.image)
}

pub fn wiener_deblur_diagnostics(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &WienerParams,
) -> Result<WienerOutput> {
    run(blurred, kernel, params, None)
}

pub(super) fn run(
    blurred: &GrayImage,
    kernel: &Kernel,
    params: &WienerParams,
    taper: Option<&EdgeTaperSpec>,
) -> Result<WienerOutput> {
    params.validate()?;
    let (canvas, padded) = Canvas::new(blurred, kernel, params.boundary, taper)?;
    let wrapped = fft::wrap_kernel(kernel, canvas.cw, canvas.ch);
    let (mut spec, k_hat) = fft::forward_real_pair(&padded, &wrapped, canvas.cw, canvas.ch);
    let mut unstable = false;
    for (b, k) in spec.iter_mut().zip(&k_hat) {
        let mut den = k.norm_sqr() + params.nsr;
        if den < SPECTRAL_FLOOR {
            den = SPECTRAL_FLOOR;
            unstable = true;
        }
        *b = k.conj() * *b / Complex64::new(den, 0.0);
    }
    if unstable {
        log::warn!("Wiener filter hit spectral zeros; result may be unstable");
    }
    let out = fft::inverse_real(spec, canvas.cw, canvas.ch);
    Ok(WienerOutput {
        image: canvas.crop(out),
        unstable,
    })
}
