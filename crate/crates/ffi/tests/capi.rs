use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use gimbal_deblur_ffi::*;

fn image(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> *mut GdImage {
    let data: Vec<f64> = (0..w * h).map(|i| f(i % w, i / w)).collect();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { gd_image_new(w, h, data.as_ptr(), &mut out) },
        GdStatus::Ok
    );
    out
}

fn read(img: *const GdImage) -> Vec<f64> {
    let (mut w, mut h) = (0, 0);
    unsafe {
        assert_eq!(gd_image_dims(img, &mut w, &mut h), GdStatus::Ok);
        let mut buf = vec![0.0; w * h];
        assert_eq!(
            gd_image_read(img, buf.as_mut_ptr(), buf.len()),
            GdStatus::Ok
        );
        buf
    }
}

fn last_error() -> String {
    let p = gd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn analytic_kernel_deblur_and_metrics() {
    unsafe {
        let mut k = ptr::null_mut();
        assert_eq!(
            gd_kernel_analytic(8.0, 558, 481, 60.0, 0.005, 30.0, &mut k),
            GdStatus::Ok
        );
        let (mut kw, mut kh) = (0, 0);
        gd_kernel_dims(k, &mut kw, &mut kh);
        let mut weights = vec![0.0; kw * kh];
        assert_eq!(
            gd_kernel_read(k, weights.as_mut_ptr(), weights.len()),
            GdStatus::Ok
        );
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let sharp = image(64, 48, |x, y| 0.5 + 0.3 * ((x / 8 + y / 8) % 2) as f64);
        for method in [
            GdMethod::Wiener,
            GdMethod::RichardsonLucy,
            GdMethod::HyperLaplacian,
        ] {
            let params = gd_deblur_params_default(method);
            let mut out = ptr::null_mut();
            assert_eq!(gd_deblur(sharp, k, &params, &mut out), GdStatus::Ok);
            assert_eq!(read(out).len(), 64 * 48);
            let (mut p, mut s) = (0.0, 0.0);
            assert_eq!(gd_psnr(out, sharp, &mut p), GdStatus::Ok);
            assert_eq!(gd_ssim(out, sharp, &mut s), GdStatus::Ok);
            assert!(p.is_finite() && s <= 1.0);
            gd_image_free(out);
        }
        let mut same = 0.0;
        gd_psnr(sharp, sharp, &mut same);
        assert_eq!(same, f64::INFINITY);
        gd_image_free(sharp);
        gd_kernel_free(k);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            gd_image_new(2, 2, ptr::null(), &mut out),
            GdStatus::NullPointer
        );
        assert!(last_error().contains("data"));

        let a = image(16, 16, |x, _| x as f64 / 16.0);
        let b = image(8, 8, |_, _| 0.5);
        let mut v = 0.0;
        assert_eq!(gd_psnr(a, b, &mut v), GdStatus::DimensionMismatch);

        let mut small = [0.0; 4];
        assert_eq!(
            gd_image_read(a, small.as_mut_ptr(), small.len()),
            GdStatus::InvalidArgument
        );

        let mut params = gd_deblur_params_default(GdMethod::HyperLaplacian);
        params.p = 1.5;
        let mut k = ptr::null_mut();
        gd_kernel_analytic(8.0, 558, 481, 10.0, 0.005, 30.0, &mut k);
        assert_eq!(
            gd_deblur(a, k, &params, &mut out),
            GdStatus::InvalidArgument
        );

        let missing = CString::new("/nonexistent/frame.pgm").unwrap();
        assert_eq!(gd_image_load(missing.as_ptr(), &mut out), GdStatus::Io);
        assert!(last_error().contains("/nonexistent/frame.pgm"));

        gd_image_free(a);
        gd_image_free(b);
        gd_kernel_free(k);
        gd_image_free(ptr::null_mut());
    }
}

#[test]
fn lut_lookup_and_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let mut lut = gimbal_deblur::pipeline::PsfLut::new("test-cam");
    let box5 = gimbal_deblur::Kernel::uniform(5, 1).unwrap();
    lut.insert(
        30.0,
        box5.clone(),
        gimbal_deblur::pipeline::Provenance::Analytic,
    )
    .unwrap();
    lut.save(dir.path()).unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut handle = ptr::null_mut();
        assert_eq!(gd_lut_load(path.as_ptr(), &mut handle), GdStatus::Ok);
        let mut k = ptr::null_mut();
        assert_eq!(gd_lut_get(handle, 30.0, &mut k), GdStatus::Ok);
        let mut miss = ptr::null_mut();
        assert_eq!(gd_lut_get(handle, 25.0, &mut miss), GdStatus::LutMiss);
        assert!(miss.is_null());

        let sharp = image(48, 40, |x, y| {
            let h = ((x * 48 + y) as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 40;
            (h % 1000) as f64 / 1000.0
        });
        let mut blurred = ptr::null_mut();
        let mut params = gd_deblur_params_default(GdMethod::Wiener);
        params.edge_taper = 0;
        let s = gimbal_deblur::GrayImage::new(48, 40, read(sharp)).unwrap();
        let b = gimbal_deblur::convolve(&s, &box5, gimbal_deblur::Boundary::Symmetric).unwrap();
        assert_eq!(
            gd_image_new(48, 40, b.data().as_ptr(), &mut blurred),
            GdStatus::Ok
        );
        let mut est = ptr::null_mut();
        assert_eq!(
            gd_kernel_estimate(blurred, sharp, 7, &mut est),
            GdStatus::Ok
        );
        let mut w = vec![0.0; 49];
        assert_eq!(gd_kernel_read(est, w.as_mut_ptr(), 49), GdStatus::Ok);
        let est_kernel = gimbal_deblur::Kernel::from_weights(7, 7, w).unwrap();
        assert!(est_kernel.normalized_cross_correlation(&box5) > 0.95);

        let mut out = ptr::null_mut();
        assert_eq!(gd_deblur(blurred, k, &params, &mut out), GdStatus::Ok);
        gd_image_free(out);
        gd_kernel_free(est);
        gd_image_free(blurred);
        gd_image_free(sharp);
        gd_kernel_free(k);
        gd_lut_free(handle);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/gimbal_deblur.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "gd_deblur",
        "gd_lut_get",
        "gd_last_error",
        "GD_STATUS_LUT_MISS",
        "typedef struct GdImage GdImage",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"gimbal_deblur.h\"\nint main(void) { GdDeblurParams p = gd_deblur_params_default(GD_METHOD_WIENER); return (int)p.method; }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}", header.parent().unwrap().display()))
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(gd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
