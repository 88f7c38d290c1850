//! Normalized, non-negative blur kernels with odd support.
//!
//! The anchor is always the center pixel `(width / 2, height / 2)`. Kernels
//! are convolution kernels: a weight at offset `(dx, dy)` from the anchor
//! spreads a point source at `p` onto `p + (dx, dy)`.
//!
//! Text format:
//!
//! ```text
//! PSF <size_x> <size_y>
//! <size_x weights>      (size_y lines)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, FormatError, Result};

/// Negative weights smaller than this in magnitude are treated as round-off.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Builds a kernel from raw weights and rescales them to sum to one.
    ///
    /// Negative weights within [`NEGATIVE_TOLERANCE`] of zero are clamped;
    /// anything more negative is rejected.
    pub fn from_weights(width: usize, height: usize, mut weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel dimensions must be odd and positive, got {width}x{height}"
            )));
        }
        if weights.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for a {width}x{height} kernel",
                weights.len()
            )));
        }
        for w in weights.iter_mut() {
            if !w.is_finite() {
                return Err(Error::invalid("non-finite kernel weight"));
            }
            if *w < 0.0 {
                if *w < -NEGATIVE_TOLERANCE {
                    return Err(Error::invalid(format!("negative kernel weight {w}")));
                }
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid("kernel weights sum to zero"));
        }
        // Already-normalized input is kept bit-exact so text round-trips are lossless.
        if (sum - 1.0).abs() > 1e-12 {
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    /// The identity kernel: a single unit weight.
    pub fn delta() -> Self {
        Self {
            width: 1,
            height: 1,
            weights: vec![1.0],
        }
    }

    pub fn uniform(width: usize, height: usize) -> Result<Self> {
        Self::from_weights(width, height, vec![1.0; width * height])
    }

    /// Sampled isotropic Gaussian on a `size`x`size` grid.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!(
                "gaussian sigma must be positive, got {sigma}"
            )));
        }
        let c = (size / 2) as f64;
        let mut w = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                w.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
            }
        }
        Self::from_weights(size, size, w)
    }

    /// Straight-line motion blur of `length` pixels at `angle_deg`
    /// (counter-clockwise from the +x axis, image y pointing down).
    ///
    /// The segment is sampled densely and splatted bilinearly onto a square
    /// canvas just large enough to hold it.
    pub fn linear_motion(length: f64, angle_deg: f64) -> Result<Self> {
        if !(length >= 1.0) {
            return Err(Error::invalid(format!(
                "motion length must be >= 1, got {length}"
            )));
        }
        let half = (length - 1.0) / 2.0;
        let (s, c) = angle_deg.to_radians().sin_cos();
        let radius = (half.ceil() as usize) + 1;
        let size = 2 * radius + 1;
        let mut w = vec![0.0; size * size];
        let samples = (length * 16.0).ceil() as usize + 1;
        for i in 0..samples {
            let t = if samples == 1 {
                0.0
            } else {
                -half + 2.0 * half * i as f64 / (samples - 1) as f64
            };
            splat_bilinear(
                &mut w,
                size,
                size,
                radius as f64 + t * c,
                radius as f64 - t * s,
                1.0,
            );
        }
        Ok(Self::from_weights(size, size, w)?.trimmed())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    pub fn radius_x(&self) -> usize {
        self.width / 2
    }

    pub fn radius_y(&self) -> usize {
        self.height / 2
    }

    pub fn is_delta(&self) -> bool {
        self.width == 1 && self.height == 1
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Point reflection through the anchor (the adjoint of convolution).
    pub fn flipped(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.reverse();
        Self {
            width: self.width,
            height: self.height,
            weights,
        }
    }

    /// Zero-pads symmetrically to `width`x`height` (both odd and no smaller).
    pub fn padded_to(&self, width: usize, height: usize) -> Result<Self> {
        if width < self.width || height < self.height || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::invalid(format!(
                "cannot pad {}x{} kernel to {width}x{height}",
                self.width, self.height
            )));
        }
        let ox = (width - self.width) / 2;
        let oy = (height - self.height) / 2;
        let mut weights = vec![0.0; width * height];
        for y in 0..self.height {
            let dst = (y + oy) * width + ox;
            weights[dst..dst + self.width]
                .copy_from_slice(&self.weights[y * self.width..(y + 1) * self.width]);
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    /// Removes all-zero border rows and columns in symmetric pairs so the
    /// anchor stays centered.
    pub fn trimmed(&self) -> Self {
        let row_zero = |y: usize| (0..self.width).all(|x| self.get(x, y) == 0.0);
        let col_zero = |x: usize| (0..self.height).all(|y| self.get(x, y) == 0.0);
        let mut ty = 0;
        while 2 * (ty + 1) < self.height && row_zero(ty) && row_zero(self.height - 1 - ty) {
            ty += 1;
        }
        let mut tx = 0;
        while 2 * (tx + 1) < self.width && col_zero(tx) && col_zero(self.width - 1 - tx) {
            tx += 1;
        }
        let (w, h) = (self.width - 2 * tx, self.height - 2 * ty);
        let mut weights = Vec::with_capacity(w * h);
        for y in ty..ty + h {
            weights.extend_from_slice(&self.weights[y * self.width + tx..y * self.width + tx + w]);
        }
        Self {
            width: w,
            height: h,
            weights,
        }
    }

    /// Sum of absolute weight differences after padding both kernels to a
    /// common size.
    pub fn l1_distance(&self, other: &Kernel) -> f64 {
        let (a, b) = common_size(self, other);
        a.weights
            .iter()
            .zip(&b.weights)
            .map(|(x, y)| (x - y).abs())
            .sum()
    }

    /// Euclidean distance between the weight vectors (common size).
    pub fn l2_distance(&self, other: &Kernel) -> f64 {
        let (a, b) = common_size(self, other);
        a.weights
            .iter()
            .zip(&b.weights)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Zero-mean normalized cross-correlation of the aligned weight vectors.
    pub fn normalized_cross_correlation(&self, other: &Kernel) -> f64 {
        let (a, b) = common_size(self, other);
        let n = a.weights.len() as f64;
        let (ma, mb) = (a.sum() / n, b.sum() / n);
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for (x, y) in a.weights.iter().zip(&b.weights) {
            num += (x - ma) * (y - mb);
            da += (x - ma) * (x - ma);
            db += (y - mb) * (y - mb);
        }
        if da == 0.0 || db == 0.0 {
            return if da == db { 1.0 } else { 0.0 };
        }
        num / (da * db).sqrt()
    }

    /// Number of columns holding any non-zero weight.
    pub fn horizontal_support(&self) -> usize {
        (0..self.width)
            .filter(|&x| (0..self.height).any(|y| self.get(x, y) > 0.0))
            .count()
    }

    /// Number of rows holding any non-zero weight.
    pub fn vertical_support(&self) -> usize {
        (0..self.height)
            .filter(|&y| (0..self.width).any(|x| self.get(x, y) > 0.0))
            .count()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("PSF {} {}\n", self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if x > 0 {
                    out.push(' ');
                }
                // `{}` on f64 prints the shortest string that round-trips.
                write!(out, "{}", self.get(x, y)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| FormatError::MalformedHeader("empty kernel file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("PSF") {
            return Err(FormatError::MalformedHeader(format!(
                "expected `PSF`, got `{header}`"
            )));
        }
        let mut dim = || -> Result<usize, FormatError> {
            fields.next().and_then(|t| t.parse().ok()).ok_or_else(|| {
                FormatError::MalformedHeader(format!("bad dimensions in `{header}`"))
            })
        };
        let (w, h) = (dim()?, dim()?);
        let mut weights = Vec::with_capacity(w * h);
        for row in 0..h {
            let line = lines.next().ok_or(FormatError::Truncated {
                expected: h,
                found: row,
            })?;
            let before = weights.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    FormatError::MalformedHeader(format!("bad weight `{tok}` on row {row}"))
                })?;
                weights.push(v);
            }
            if weights.len() - before != w {
                return Err(FormatError::MalformedHeader(format!(
                    "row {row} has {} weights, expected {w}",
                    weights.len() - before
                )));
            }
        }
        Kernel::from_weights(w, h, weights).map_err(|e| FormatError::Unsupported(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text).map_err(|e| Error::format(path, e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn common_size(a: &Kernel, b: &Kernel) -> (Kernel, Kernel) {
    let w = a.width.max(b.width);
    let h = a.height.max(b.height);
    (a.padded_to(w, h).unwrap(), b.padded_to(w, h).unwrap())
}

/// Adds `value` at fractional position `(x, y)` with bilinear weights.
/// Contributions that fall outside the canvas are dropped.
pub(crate) fn splat_bilinear(
    buf: &mut [f64],
    width: usize,
    height: usize,
    x: f64,
    y: f64,
    value: f64,
) {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    for (dx, dy, wgt) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        let (px, py) = (x0 + dx, y0 + dy);
        if wgt > 0.0 && px >= 0 && py >= 0 && (px as usize) < width && (py as usize) < height {
            buf[py as usize * width + px as usize] += value * wgt;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_validates() {
        let k = Kernel::from_weights(3, 1, vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(k.weights(), &[0.25, 0.5, 0.25]);
        assert!(Kernel::from_weights(2, 1, vec![1.0, 1.0]).is_err());
        assert!(Kernel::from_weights(3, 1, vec![1.0, -0.1, 1.0]).is_err());
        assert!(Kernel::from_weights(3, 1, vec![0.0; 3]).is_err());
        let k = Kernel::from_weights(3, 1, vec![1.0, -1e-12, 1.0]).unwrap();
        assert_eq!(k.get(1, 0), 0.0);
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let k = Kernel::gaussian(7, 1.3).unwrap();
        let back = Kernel::parse_text(&k.to_text()).unwrap();
        assert_eq!(k, back);
    }

    #[test]
    fn text_parse_errors() {
        assert!(matches!(
            Kernel::parse_text("KERNEL 3 3\n"),
            Err(FormatError::MalformedHeader(_))
        ));
        assert!(matches!(
            Kernel::parse_text("PSF 3 2\n1 1 1\n"),
            Err(FormatError::Truncated { .. })
        ));
        assert!(matches!(
            Kernel::parse_text("PSF 3 1\n1 1\n"),
            Err(FormatError::MalformedHeader(_))
        ));
        // Re-normalized on load.
        let k = Kernel::parse_text("PSF 3 1\n2 4 2\n").unwrap();
        assert_eq!(k.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn trim_keeps_anchor_centered() {
        let mut w = vec![0.0; 25];
        w[12] = 1.0;
        w[13] = 1.0;
        let k = Kernel::from_weights(5, 5, w).unwrap().trimmed();
        assert_eq!((k.width(), k.height()), (3, 1));
        assert_eq!(k.weights(), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn linear_motion_has_requested_extent() {
        let k = Kernel::linear_motion(21.0, 0.0).unwrap();
        assert_eq!(k.horizontal_support(), 21);
        assert_eq!(k.vertical_support(), 1);
        let k = Kernel::linear_motion(21.0, 30.0).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-12);
        // 30 degrees: upper-right and lower-left quadrants carry the mass.
        let (cx, cy) = (k.radius_x(), k.radius_y());
        assert!(k.get(cx + 6, cy - 3) + k.get(cx + 6, cy - 4) > 0.0);
        assert_eq!(k.get(cx + 6, cy + 4), 0.0);
    }

    #[test]
    fn correlation_of_identical_kernels_is_one() {
        let k = Kernel::gaussian(5, 1.0).unwrap();
        assert!((k.normalized_cross_correlation(&k) - 1.0).abs() < 1e-12);
        assert!(k.l1_distance(&k) == 0.0);
    }
}
