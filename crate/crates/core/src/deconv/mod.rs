//! Non-blind deconvolution: Wiener, Richardson-Lucy and hyper-Laplacian
//! engines, edge tapering, and a timed dispatcher.
//!
//! All engines work on a canvas padded to a smooth FFT size (symmetric
//! extension by default) and crop back, or directly on the image when the
//! boundary is periodic. When [`deblur`] tapers edges it tapers that canvas,
//! so with padding the blend band lies in the extension and every visible
//! pixel keeps its value.

mod hyperlap;
mod rl;
mod taper;
mod wiener;

pub use hyperlap::{
    hyperlap_deblur, hyperlap_deblur_traced, shrink, HyperLapParams, HyperLapStage,
};
pub use rl::{rl_deblur, rl_deblur_with, RlParams, RATIO_FLOOR};
pub use taper::{
    edge_taper, taper_weights, EdgeTaperSpec, DEFAULT_TAPER_SIGMA, DEFAULT_TAPER_SIZE,
};
pub use wiener::{
    wiener_deblur, wiener_deblur_diagnostics, WienerOutput, WienerParams, SPECTRAL_FLOOR,
};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::convolve::{pad, Boundary};
use crate::error::{Error, Result};
use crate::fft;
use crate::image::GrayImage;
use crate::kernel::Kernel;

/// Working canvas of a frequency-domain solve.
struct Canvas {
    w: usize,
    h: usize,
    cw: usize,
    ch: usize,
    x0: usize,
    y0: usize,
}

impl Canvas {
    fn new(
        image: &GrayImage,
        kernel: &Kernel,
        boundary: Boundary,
        taper: Option<&EdgeTaperSpec>,
    ) -> Result<(Self, Vec<f64>)> {
        let (w, h) = image.dims();
        if kernel.width() > w || kernel.height() > h {
            return Err(Error::KernelTooLarge {
                kernel_w: kernel.width(),
                kernel_h: kernel.height(),
                image_w: w,
                image_h: h,
            });
        }
        if boundary == Boundary::Periodic {
            let c = Canvas {
                w,
                h,
                cw: w,
                ch: h,
                x0: 0,
                y0: 0,
            };
            let data = match taper {
                Some(spec) => edge_taper(image, spec)?.into_data(),
                None => image.data().to_vec(),
            };
            return Ok((c, data));
        }
        let (tw, th) = taper.map_or((0, 0), |t| {
            (t.taper_kernel.width(), t.taper_kernel.height())
        });
        let (mx, my) = (kernel.radius_x() + tw, kernel.radius_y() + th);
        let cw = fft::next_smooth(w + 2 * mx);
        let ch = fft::next_smooth(h + 2 * my);
        let mut padded = pad(image, mx, cw - w - mx, my, ch - h - my, boundary);
        if let Some(spec) = taper {
            padded = edge_taper(&padded, spec)?;
        }
        let c = Canvas {
            w,
            h,
            cw,
            ch,
            x0: mx,
            y0: my,
        };
        Ok((c, padded.into_data()))
    }

    fn crop(&self, data: Vec<f64>) -> GrayImage {
        if self.cw == self.w && self.ch == self.h {
            return GrayImage::from_raw(self.w, self.h, data);
        }
        let mut out = Vec::with_capacity(self.w * self.h);
        for y in self.y0..self.y0 + self.h {
            let start = y * self.cw + self.x0;
            out.extend_from_slice(&data[start..start + self.w]);
        }
        GrayImage::from_raw(self.w, self.h, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wiener,
    Rl,
    Hyperlap,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Wiener, Method::Rl, Method::Hyperlap];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Wiener => "wiener",
            Method::Rl => "rl",
            Method::Hyperlap => "hyperlap",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wiener" => Ok(Method::Wiener),
            "rl" | "richardson-lucy" => Ok(Method::Rl),
            "hyperlap" | "hyper-laplacian" => Ok(Method::Hyperlap),
            _ => Err(Error::UnknownMethod(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodParams {
    Wiener(WienerParams),
    Rl(RlParams),
    Hyperlap(HyperLapParams),
}

impl MethodParams {
    pub fn default_for(method: Method) -> Self {
        match method {
            Method::Wiener => MethodParams::Wiener(WienerParams::default()),
            Method::Rl => MethodParams::Rl(RlParams::default()),
            Method::Hyperlap => MethodParams::Hyperlap(HyperLapParams::default()),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            MethodParams::Wiener(_) => Method::Wiener,
            MethodParams::Rl(_) => Method::Rl,
            MethodParams::Hyperlap(_) => Method::Hyperlap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodParams::Wiener(p) => p.validate(),
            MethodParams::Rl(p) => p.validate(),
            MethodParams::Hyperlap(p) => p.validate(),
        }
    }
}

/// Engine choice plus the optional edge-taper preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct DeblurConfig {
    pub params: MethodParams,
    pub edge_taper: Option<EdgeTaperSpec>,
}

impl DeblurConfig {
    pub fn new(params: MethodParams) -> Self {
        Self {
            params,
            edge_taper: Some(EdgeTaperSpec::default()),
        }
    }

    pub fn method(&self) -> Method {
        self.params.method()
    }
}

/// Wall-clock cost of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTiming {
    pub frame: String,
    pub method: Method,
    pub ms: f64,
}

/// Edge-tapers the working canvas (unless disabled) and runs the configured
/// engine. With a periodic boundary this is exactly `engine(edge_taper(B))`;
/// otherwise the frame is first extended by the kernel radius plus the taper
/// size, so the taper only touches the extension.
pub fn deblur(blurred: &GrayImage, kernel: &Kernel, cfg: &DeblurConfig) -> Result<GrayImage> {
    cfg.params.validate()?;
    let taper = cfg.edge_taper.as_ref();
    match &cfg.params {
        MethodParams::Wiener(p) => wiener::run(blurred, kernel, p, taper).map(|o| o.image),
        MethodParams::Rl(p) => rl::run(blurred, kernel, p, taper, |_, _| {}),
        MethodParams::Hyperlap(p) => {
            hyperlap::run(blurred, kernel, p, taper, false).map(|(img, _)| img)
        }
    }
}

/// [`deblur`] plus its wall-clock time, labelled with `frame`.
pub fn deblur_timed(
    blurred: &GrayImage,
    kernel: &Kernel,
    cfg: &DeblurConfig,
    frame: &str,
) -> Result<(GrayImage, FrameTiming)> {
    let start = Instant::now();
    let out = deblur(blurred, kernel, cfg)?;
    let timing = FrameTiming {
        frame: frame.to_owned(),
        method: cfg.method(),
        ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((out, timing))
}
