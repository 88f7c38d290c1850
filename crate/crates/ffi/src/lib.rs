//! C interface to the deblurring library.
//!
//! Images, kernels and lookup tables are opaque handles created and freed by
//! this library. Every fallible function returns a [`GdStatus`]; the message
//! of the last failure on the calling thread is available through
//! [`gd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gimbal_deblur::deconv::{
    deblur, DeblurConfig, HyperLapParams, MethodParams, RlParams, WienerParams,
};
use gimbal_deblur::io::{load_image, save_image};
use gimbal_deblur::metrics::{psnr, ssim, SsimConfig};
use gimbal_deblur::pipeline::PsfLut;
use gimbal_deblur::psf_analytic::{
    synthesize_psf, CameraIntrinsics, GimbalMotion, PsfSynthesisConfig,
};
use gimbal_deblur::psf_estimate::{estimate_kernel, EstimationConfig};
use gimbal_deblur::{Error, GrayImage, Kernel};

/// Grayscale image with samples in [0, 1].
pub struct GdImage(GrayImage);

/// Normalized blur kernel.
pub struct GdKernel(Kernel);

/// Steering-rate PSF lookup table.
pub struct GdLut(PsfLut);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Format = 5,
    LutMiss = 6,
    IllPosed = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdMethod {
    Wiener = 0,
    RichardsonLucy = 1,
    HyperLaplacian = 2,
}

/// Parameters of [`gd_deblur`]; only the fields of the chosen method are read.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdDeblurParams {
    pub method: GdMethod,
    pub nsr: f64,
    pub rl_iterations: u32,
    pub lambda: f64,
    pub p: f64,
    /// Non-zero enables edge tapering.
    pub edge_taper: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GdStatus {
    match e {
        Error::InvalidArgument(_) | Error::UnknownMethod(_) | Error::KernelTooLarge { .. } => {
            GdStatus::InvalidArgument
        }
        Error::DimensionMismatch(_) => GdStatus::DimensionMismatch,
        Error::IllPosed(_) => GdStatus::IllPosed,
        Error::LutMiss { .. } => GdStatus::LutMiss,
        Error::Io { .. } => GdStatus::Io,
        Error::Format { .. } | Error::Json { .. } => GdStatus::Format,
    }
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (GdStatus, String)>) -> GdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GdStatus::Panic
        }
    }
}

fn lib<T>(r: gimbal_deblur::Result<T>) -> Result<T, (GdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GdStatus, String) {
    (GdStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, (GdStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (GdStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (GdStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `width * height` row-major samples into a new image.
///
/// # Safety
/// `data` must point to `width * height` readable doubles and `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_image_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut GdImage,
) -> GdStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let n = width
            .checked_mul(height)
            .ok_or((GdStatus::InvalidArgument, "size overflow".into()))?;
        let samples = std::slice::from_raw_parts(data, n).to_vec();
        store(out, GdImage(lib(GrayImage::new(width, height, samples))?))
    })
}

/// Loads a PGM or PNG file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_image_load(path: *const c_char, out: *mut *mut GdImage) -> GdStatus {
    guard(|| {
        let path = path_arg(path)?;
        store(out, GdImage(lib(load_image(path))?))
    })
}

/// Saves as 16-bit PGM, or PNG when the path ends in `.png`.
///
/// # Safety
/// `image` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gd_image_save(image: *const GdImage, path: *const c_char) -> GdStatus {
    guard(|| {
        let image = deref(image, "image")?;
        lib(save_image(&image.0, path_arg(path)?))
    })
}

/// Writes the image size; either output may be NULL.
///
/// # Safety
/// `image` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_image_dims(
    image: *const GdImage,
    width: *mut usize,
    height: *mut usize,
) -> GdStatus {
    guard(|| {
        let (w, h) = deref(image, "image")?.0.dims();
        if let Some(p) = width.as_mut() {
            *p = w;
        }
        if let Some(p) = height.as_mut() {
            *p = h;
        }
        Ok(())
    })
}

/// Copies the samples into `dst`, which must hold `len >= width * height`
/// doubles.
///
/// # Safety
/// `image` must be a live handle and `dst` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_image_read(
    image: *const GdImage,
    dst: *mut f64,
    len: usize,
) -> GdStatus {
    guard(|| {
        let data = deref(image, "image")?.0.data();
        if dst.is_null() {
            return Err(null("dst"));
        }
        if len < data.len() {
            return Err((
                GdStatus::InvalidArgument,
                format!("buffer holds {len} samples, image has {}", data.len()),
            ));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), dst, data.len());
        Ok(())
    })
}

/// # Safety
/// `image` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn gd_image_free(image: *mut GdImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Yaw-motion PSF at the image center for a camera given by its diagonal
/// field of view and frame size.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_kernel_analytic(
    fov_deg: f64,
    width: usize,
    height: usize,
    steering_rate_deg_s: f64,
    exposure_s: f64,
    frame_rate: f64,
    out: *mut *mut GdKernel,
) -> GdStatus {
    guard(|| {
        let intr = lib(CameraIntrinsics::from_fov(fov_deg, width, height))?;
        let motion = lib(GimbalMotion::new(
            steering_rate_deg_s,
            exposure_s,
            frame_rate,
        ))?;
        let k = lib(synthesize_psf(
            &intr,
            &motion,
            &PsfSynthesisConfig::default(),
        ))?;
        store(out, GdKernel(k))
    })
}

/// Loads a kernel text file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_kernel_load(path: *const c_char, out: *mut *mut GdKernel) -> GdStatus {
    guard(|| {
        let path = path_arg(path)?;
        store(out, GdKernel(lib(Kernel::load(path))?))
    })
}

/// Estimates a `kernel_size` x `kernel_size` kernel from a blurred image
/// and its sharp counterpart.
///
/// # Safety
/// Both images must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_kernel_estimate(
    blurred: *const GdImage,
    sharp: *const GdImage,
    kernel_size: usize,
    out: *mut *mut GdKernel,
) -> GdStatus {
    guard(|| {
        let cfg = EstimationConfig {
            kernel_size,
            ..EstimationConfig::default()
        };
        let k = lib(estimate_kernel(
            &deref(blurred, "blurred")?.0,
            &deref(sharp, "sharp")?.0,
            &cfg,
        ))?;
        store(out, GdKernel(k))
    })
}

/// Writes the kernel size; either output may be NULL.
///
/// # Safety
/// `kernel` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_kernel_dims(
    kernel: *const GdKernel,
    width: *mut usize,
    height: *mut usize,
) -> GdStatus {
    guard(|| {
        let k = &deref(kernel, "kernel")?.0;
        if let Some(p) = width.as_mut() {
            *p = k.width();
        }
        if let Some(p) = height.as_mut() {
            *p = k.height();
        }
        Ok(())
    })
}

/// Copies the row-major weights into `dst` (`len >= width * height`).
///
/// # Safety
/// `kernel` must be a live handle and `dst` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn gd_kernel_read(
    kernel: *const GdKernel,
    dst: *mut f64,
    len: usize,
) -> GdStatus {
    guard(|| {
        let w = deref(kernel, "kernel")?.0.weights();
        if dst.is_null() {
            return Err(null("dst"));
        }
        if len < w.len() {
            return Err((
                GdStatus::InvalidArgument,
                format!("buffer holds {len} weights, kernel has {}", w.len()),
            ));
        }
        ptr::copy_nonoverlapping(w.as_ptr(), dst, w.len());
        Ok(())
    })
}

/// # Safety
/// `kernel` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn gd_kernel_free(kernel: *mut GdKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Opens a LUT directory written by the `build-lut` command.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_lut_load(dir: *const c_char, out: *mut *mut GdLut) -> GdStatus {
    guard(|| {
        let dir = path_arg(dir)?;
        store(out, GdLut(lib(PsfLut::load(dir))?))
    })
}

/// Copies the kernel stored for a steering rate into a new handle.
/// Returns `GD_STATUS_LUT_MISS` when the rate is not stored.
///
/// # Safety
/// `lut` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_lut_get(
    lut: *const GdLut,
    steering_rate_deg_s: f64,
    out: *mut *mut GdKernel,
) -> GdStatus {
    guard(|| {
        let k = lib(deref(lut, "lut")?.0.get(steering_rate_deg_s).cloned())?;
        store(out, GdKernel(k))
    })
}

/// # Safety
/// `lut` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn gd_lut_free(lut: *mut GdLut) {
    if !lut.is_null() {
        drop(Box::from_raw(lut));
    }
}

/// Library defaults for `method`, with edge tapering enabled.
#[no_mangle]
pub extern "C" fn gd_deblur_params_default(method: GdMethod) -> GdDeblurParams {
    GdDeblurParams {
        method,
        nsr: WienerParams::default().nsr,
        rl_iterations: RlParams::default().iterations as u32,
        lambda: HyperLapParams::default().lambda,
        p: HyperLapParams::default().p,
        edge_taper: 1,
    }
}

fn deblur_config(p: &GdDeblurParams) -> DeblurConfig {
    let params = match p.method {
        GdMethod::Wiener => MethodParams::Wiener(WienerParams {
            nsr: p.nsr,
            ..WienerParams::default()
        }),
        GdMethod::RichardsonLucy => MethodParams::Rl(RlParams {
            iterations: p.rl_iterations as usize,
            ..RlParams::default()
        }),
        GdMethod::HyperLaplacian => MethodParams::Hyperlap(HyperLapParams {
            lambda: p.lambda,
            p: p.p,
            ..HyperLapParams::default()
        }),
    };
    let mut cfg = DeblurConfig::new(params);
    if p.edge_taper == 0 {
        cfg.edge_taper = None;
    }
    cfg
}

/// Deblurs `blurred` with `kernel`. `params` may be NULL for the Wiener
/// defaults.
///
/// # Safety
/// `blurred` and `kernel` must be live handles, `params` NULL or valid, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_deblur(
    blurred: *const GdImage,
    kernel: *const GdKernel,
    params: *const GdDeblurParams,
    out: *mut *mut GdImage,
) -> GdStatus {
    guard(|| {
        let p = params
            .as_ref()
            .copied()
            .unwrap_or_else(|| gd_deblur_params_default(GdMethod::Wiener));
        let cfg = deblur_config(&p);
        let img = lib(deblur(
            &deref(blurred, "blurred")?.0,
            &deref(kernel, "kernel")?.0,
            &cfg,
        ))?;
        store(out, GdImage(img))
    })
}

/// PSNR in dB for a dynamic range of 1; +infinity for identical images.
///
/// # Safety
/// Both images must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_psnr(
    x: *const GdImage,
    reference: *const GdImage,
    out: *mut f64,
) -> GdStatus {
    guard(|| {
        let v = lib(psnr(&deref(x, "x")?.0, &deref(reference, "reference")?.0))?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5).
///
/// # Safety
/// Both images must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gd_ssim(
    x: *const GdImage,
    reference: *const GdImage,
    out: *mut f64,
) -> GdStatus {
    guard(|| {
        let v = lib(ssim(
            &deref(x, "x")?.0,
            &deref(reference, "reference")?.0,
            &SsimConfig::default(),
        ))?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}
