//! PSF-aware motion deblurring for yaw-panning gimbal cameras.

pub mod convolve;
pub mod deconv;
pub mod error;
pub mod fft;
pub mod image;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod psf_analytic;
pub mod psf_estimate;

pub use convolve::{convolve, Boundary};
pub use error::{Error, FormatError, Result};
pub use image::GrayImage;
pub use kernel::Kernel;
pub use noise::{add_awgn, NoiseSpec};
