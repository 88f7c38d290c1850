//! Closed-form PSF synthesis for pure yaw rotation.
//!
//! A point at the anchor pixel is pushed through the rotational homography
//! `K R_y(theta) K^-1` for a symmetric fan of angles covering the exposure;
//! each landing position is splatted bilinearly and the result normalized.
//!
//! Angles are radians throughout; degrees only appear in constructor
//! arguments named `*_deg`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::kernel::{splat_bilinear, Kernel};

/// Pinhole intrinsics with the principal point at the image center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    focal_px: f64,
    width: usize,
    height: usize,
}

impl CameraIntrinsics {
    pub fn new(focal_px: f64, width: usize, height: usize) -> Result<Self> {
        if !(focal_px > 0.0 && focal_px.is_finite()) {
            return Err(Error::invalid(format!(
                "focal length must be positive, got {focal_px}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        Ok(Self {
            focal_px,
            width,
            height,
        })
    }

    /// Derives the focal length from the diagonal field of view.
    pub fn from_fov(fov_deg: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(focal_from_fov(fov_deg, width, height)?, width, height)
    }

    pub fn focal(&self) -> f64 {
        self.focal_px
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// The pixel nearest the image center, used as the default anchor.
    pub fn center_pixel(&self) -> (f64, f64) {
        ((self.width / 2) as f64, (self.height / 2) as f64)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let (cx, cy) = self.principal_point();
        Matrix3::new(
            self.focal_px,
            0.0,
            cx,
            0.0,
            self.focal_px,
            cy,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }
}

/// Focal length in pixels from the diagonal FOV: `sqrt(w^2 + h^2) / (2 tan(alpha / 2))`.
pub fn focal_from_fov(fov_deg: f64, width: usize, height: usize) -> Result<f64> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::invalid(format!(
            "field of view must be in (0, 180) degrees, got {fov_deg}"
        )));
    }
    let diag = ((width * width + height * height) as f64).sqrt();
    Ok(diag / (2.0 * (fov_deg.to_radians() / 2.0).tan()))
}

/// Constant-rate yaw motion during one exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalMotion {
    pub steering_rate_deg_s: f64,
    pub exposure_s: f64,
    pub frame_rate: f64,
}

impl GimbalMotion {
    pub fn new(steering_rate_deg_s: f64, exposure_s: f64, frame_rate: f64) -> Result<Self> {
        let m = Self {
            steering_rate_deg_s,
            exposure_s,
            frame_rate,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.steering_rate_deg_s >= 0.0 && self.steering_rate_deg_s.is_finite()) {
            return Err(Error::invalid(format!(
                "steering rate must be >= 0, got {}",
                self.steering_rate_deg_s
            )));
        }
        if !(self.exposure_s > 0.0 && self.exposure_s.is_finite()) {
            return Err(Error::invalid(format!(
                "exposure must be > 0, got {}",
                self.exposure_s
            )));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "frame rate must be > 0, got {}",
                self.frame_rate
            )));
        }
        Ok(())
    }

    /// Total rotation during the exposure, in radians.
    pub fn exposure_rotation(&self) -> f64 {
        (self.steering_rate_deg_s * self.exposure_s).to_radians()
    }
}

/// Rotation angle producing a spread of `spread_px` pixels at distance
/// `offset_px` from the principal point: `p f / (f^2 + d^2)`.
pub fn rotation_for_spread(spread_px: f64, focal_px: f64, offset_px: f64) -> f64 {
    spread_px * focal_px / (focal_px * focal_px + offset_px * offset_px)
}

/// Maximum pixel spread from the anchor: half the exposure rotation mapped
/// through the inverse of [`rotation_for_spread`].
pub fn max_spread(motion: &GimbalMotion, focal_px: f64, offset_px: f64) -> f64 {
    motion.exposure_rotation() / 2.0 * (focal_px * focal_px + offset_px * offset_px) / focal_px
}

/// `K R_y(theta) K^-1` for a yaw rotation of `theta` radians.
pub fn yaw_homography(intrinsics: &CameraIntrinsics, theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    let r = Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c);
    let k = intrinsics.matrix();
    let f = intrinsics.focal();
    let (cx, cy) = intrinsics.principal_point();
    let k_inv = Matrix3::new(1.0 / f, 0.0, -cx / f, 0.0, 1.0 / f, -cy / f, 0.0, 0.0, 1.0);
    k * r * k_inv
}

/// Applies a homography to a pixel coordinate.
pub fn apply_homography(h: &Matrix3<f64>, (x, y): (f64, f64)) -> (f64, f64) {
    let p = h * Vector3::new(x, y, 1.0);
    (p.x / p.z, p.y / p.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfSynthesisConfig {
    /// Pixel whose PSF is computed; `None` means the center pixel.
    pub anchor: Option<(f64, f64)>,
    /// Angular samples per one-pixel rotation step.
    pub oversample: usize,
    /// Replaces the spread derived from the motion, in pixels.
    pub max_spread_override: Option<f64>,
}

impl Default for PsfSynthesisConfig {
    fn default() -> Self {
        Self {
            anchor: None,
            oversample: 4,
            max_spread_override: None,
        }
    }
}

/// Equal-weight rotation samples covering `[-theta_max, theta_max]`: the
/// midpoints of `2m` equal sub-intervals, with `m` chosen so the spacing
/// does not exceed `max_step`.
pub fn rotation_samples(theta_max: f64, max_step: f64) -> Vec<f64> {
    if theta_max <= 0.0 {
        return vec![0.0];
    }
    let m = (theta_max / max_step - 1e-9).ceil().max(1.0) as usize;
    (0..2 * m)
        .map(|i| theta_max * (2 * i + 1) as f64 / (2 * m) as f64 - theta_max)
        .collect()
}

/// Angular samples used for a given anchor; exposed so independent checks
/// can reuse the exact same fan of rotations.
pub fn anchor_rotations(
    intrinsics: &CameraIntrinsics,
    motion: &GimbalMotion,
    config: &PsfSynthesisConfig,
) -> Result<Vec<f64>> {
    motion.validate()?;
    if config.oversample == 0 {
        return Err(Error::invalid("oversample must be >= 1"));
    }
    let anchor = config.anchor.unwrap_or_else(|| intrinsics.center_pixel());
    if !intrinsics.contains(anchor) {
        return Err(Error::invalid(format!(
            "anchor ({}, {}) outside {}x{} image",
            anchor.0,
            anchor.1,
            intrinsics.width(),
            intrinsics.height()
        )));
    }
    let f = intrinsics.focal();
    let spread = match config.max_spread_override {
        Some(s) if s >= 0.0 && s.is_finite() => s,
        Some(s) => {
            return Err(Error::invalid(format!(
                "max spread override must be >= 0, got {s}"
            )))
        }
        None => max_spread(motion, f, 0.0),
    };
    let offset = anchor.0 - intrinsics.principal_point().0;
    let theta_max = rotation_for_spread(spread, f, offset);
    let theta_step = rotation_for_spread(1.0, f, offset) / config.oversample as f64;
    Ok(rotation_samples(theta_max, theta_step))
}

/// Synthesizes the yaw-motion PSF at `config.anchor`.
pub fn synthesize_psf(
    intrinsics: &CameraIntrinsics,
    motion: &GimbalMotion,
    config: &PsfSynthesisConfig,
) -> Result<Kernel> {
    let thetas = anchor_rotations(intrinsics, motion, config)?;
    if thetas.len() == 1 && thetas[0] == 0.0 {
        return Ok(Kernel::delta());
    }
    let anchor = config.anchor.unwrap_or_else(|| intrinsics.center_pixel());
    let offsets: Vec<(f64, f64)> = thetas
        .iter()
        .map(|&t| {
            let (x, y) = apply_homography(&yaw_homography(intrinsics, t), anchor);
            (x - anchor.0, y - anchor.1)
        })
        .collect();
    let extent = offsets
        .iter()
        .fold(0.0f64, |m, (dx, dy)| m.max(dx.abs()).max(dy.abs()));
    let spread = config
        .max_spread_override
        .unwrap_or_else(|| max_spread(motion, intrinsics.focal(), 0.0));
    let radius = extent.max(spread).ceil() as usize + 1;
    let side = 2 * radius + 1;
    let mut canvas = vec![0.0; side * side];
    for (dx, dy) in offsets {
        splat_bilinear(
            &mut canvas,
            side,
            side,
            radius as f64 + dx,
            radius as f64 + dy,
            1.0,
        );
    }
    Ok(Kernel::from_weights(side, side, canvas)?.trimmed())
}

/// The center pixel plus the four corner pixels.
pub fn center_and_corners(intrinsics: &CameraIntrinsics) -> Vec<(f64, f64)> {
    let (w, h) = (
        (intrinsics.width() - 1) as f64,
        (intrinsics.height() - 1) as f64,
    );
    vec![
        intrinsics.center_pixel(),
        (0.0, 0.0),
        (w, 0.0),
        (0.0, h),
        (w, h),
    ]
}

/// Mean of the per-anchor PSFs, padded to a common size and renormalized.
pub fn psf_grid(
    intrinsics: &CameraIntrinsics,
    motion: &GimbalMotion,
    anchors: &[(f64, f64)],
    config: &PsfSynthesisConfig,
) -> Result<Kernel> {
    if anchors.is_empty() {
        return Err(Error::invalid("at least one anchor is required"));
    }
    let kernels = anchors
        .iter()
        .map(|&a| {
            synthesize_psf(
                intrinsics,
                motion,
                &PsfSynthesisConfig {
                    anchor: Some(a),
                    ..*config
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    average_kernels(&kernels)
}

/// Element-wise mean of kernels after centering them on a common canvas.
pub fn average_kernels(kernels: &[Kernel]) -> Result<Kernel> {
    let first = kernels
        .first()
        .ok_or_else(|| Error::invalid("no kernels to average"))?;
    if kernels.len() == 1 {
        return Ok(first.clone());
    }
    let w = kernels.iter().map(Kernel::width).max().unwrap();
    let h = kernels.iter().map(Kernel::height).max().unwrap();
    let mut acc = vec![0.0; w * h];
    for k in kernels {
        for (a, v) in acc.iter_mut().zip(k.padded_to(w, h)?.weights()) {
            *a += v;
        }
    }
    let n = kernels.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Kernel::from_weights(w, h, acc)
}
