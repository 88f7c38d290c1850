//! Grayscale image files: binary PGM (`P5`, 8 or 16 bit) and grayscale PNG.
//!
//! Samples are mapped to `[0, 1]` by dividing by the maximum code value.
//! Saving clips to `[0, 1]` and rounds to the nearest code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, FormatError, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    Eight,
    #[default]
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

/// Loads a PGM or PNG file, dispatching on the magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| Error::format(path, e))
}

/// Saves as 16-bit PGM, or PNG when the extension is `.png`.
pub fn save_image(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    save_image_with_depth(image, path, BitDepth::Sixteen)
}

pub fn save_image_with_depth(
    image: &GrayImage,
    path: impl AsRef<Path>,
    depth: BitDepth,
) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(image, depth)
    } else {
        encode_pgm(image, depth)
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage, FormatError> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(bytes)
    } else {
        Err(FormatError::Unsupported(
            "expected binary PGM (P5) or PNG".into(),
        ))
    }
}

fn quantize(v: f64, max: u16) -> u16 {
    (v.clamp(0.0, 1.0) * max as f64).round() as u16
}

pub fn encode_pgm(image: &GrayImage, depth: BitDepth) -> Vec<u8> {
    let max = depth.max_value();
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), max).into_bytes();
    match depth {
        BitDepth::Eight => out.extend(image.data().iter().map(|&v| quantize(v, max) as u8)),
        BitDepth::Sixteen => {
            for &v in image.data() {
                out.extend_from_slice(&quantize(v, max).to_be_bytes());
            }
        }
    }
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, FormatError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::MalformedHeader(format!("missing or invalid {what}")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, FormatError> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(FormatError::MalformedHeader(format!(
            "maxval {maxval} out of range"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(FormatError::MalformedHeader(
                "no separator after maxval".into(),
            ))
        }
    }
    let bps = if maxval < 256 { 1 } else { 2 };
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bps))
        .ok_or_else(|| FormatError::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let scale = 1.0 / maxval as f64;
    let data: Vec<f64> = if bps == 1 {
        payload[..expected]
            .iter()
            .map(|&b| b as f64 * scale)
            .collect()
    } else {
        payload[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    };
    Ok(GrayImage::from_raw(width, height, data))
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage, FormatError> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| FormatError::MalformedHeader(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| match e {
        png::DecodingError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            FormatError::Truncated {
                expected: 0,
                found: bytes.len(),
            }
        }
        other => FormatError::MalformedHeader(other.to_string()),
    })?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        other => {
            return Err(FormatError::Unsupported(format!(
                "PNG color type {other:?} is not grayscale"
            )))
        }
    };
    let data: Vec<f64> = match info.bit_depth {
        png::BitDepth::Sixteen => buf[..info.buffer_size()]
            .chunks_exact(2 * channels)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect(),
        _ => buf[..info.buffer_size()]
            .chunks_exact(channels)
            .map(|c| c[0] as f64 / 255.0)
            .collect(),
    };
    GrayImage::new(w, h, data).map_err(|e| FormatError::MalformedHeader(e.to_string()))
}

fn encode_png(image: &GrayImage, depth: BitDepth) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        let max = depth.max_value();
        let raster: Vec<u8> = match depth {
            BitDepth::Eight => {
                enc.set_depth(png::BitDepth::Eight);
                image
                    .data()
                    .iter()
                    .map(|&v| quantize(v, max) as u8)
                    .collect()
            }
            BitDepth::Sixteen => {
                enc.set_depth(png::BitDepth::Sixteen);
                image
                    .data()
                    .iter()
                    .flat_map(|&v| quantize(v, max).to_be_bytes())
                    .collect()
            }
        };
        let mut writer = enc.write_header().expect("writing to a Vec cannot fail");
        writer
            .write_image_data(&raster)
            .expect("raster size matches header");
    }
    out
}

/// Image files (`.pgm`, `.png`) in `dir`, ordered by the last run of digits in
/// the file stem, then by name. Files without digits sort after numbered ones.
pub fn list_frames(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"));
        if is_image && path.is_file() {
            frames.push(path);
        }
    }
    frames.sort_by_cached_key(|p| {
        let stem = p
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_owned();
        (frame_number(&stem).unwrap_or(u64::MAX), stem)
    });
    Ok(frames)
}

/// Last run of ASCII digits in `stem`.
pub fn frame_number(stem: &str) -> Option<u64> {
    let end = stem.rfind(|c: char| c.is_ascii_digit())? + 1;
    let start = stem[..end]
        .rfind(|c: char| !c.is_ascii_digit())
        .map_or(0, |i| i + 1);
    stem[start..end].parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient() -> GrayImage {
        GrayImage::from_fn(4, 4, |x, y| (x + 4 * y) as f64 / 15.0).unwrap()
    }

    #[test]
    fn sixteen_bit_roundtrip_within_one_step() {
        let img =
            GrayImage::from_fn(4, 4, |x, y| (x as f64 * 0.173 + y as f64 * 0.061) % 1.0).unwrap();
        let back = decode(&encode_pgm(&img, BitDepth::Sixteen)).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 65535.0);
        }
        let back = decode(&encode_png(&img, BitDepth::Sixteen)).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 65535.0);
        }
    }

    #[test]
    fn eight_bit_scaled_by_255() {
        let mut bytes = b"P5\n# comment\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 51, 255]);
        let img = decode(&bytes).unwrap();
        assert_eq!(img.data(), &[0.0, 51.0 / 255.0, 1.0]);
        let back = decode(&encode_pgm(&gradient(), BitDepth::Eight)).unwrap();
        assert_eq!(back.dims(), (4, 4));
    }

    #[test]
    fn distinct_error_cases() {
        let mut short = b"P5\n4 4\n255\n".to_vec();
        short.extend_from_slice(&[0; 10]);
        assert!(matches!(
            decode(&short),
            Err(FormatError::Truncated {
                expected: 16,
                found: 10
            })
        ));
        assert!(matches!(
            decode(b"P5\n4 x\n255\n"),
            Err(FormatError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode(b"P5\n4 4\n70000\n"),
            Err(FormatError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode(b"P2\n1 1\n255\n0"),
            Err(FormatError::Unsupported(_))
        ));
    }

    #[test]
    fn save_clips_out_of_range() {
        let img = GrayImage::new(2, 1, vec![-0.5, 1.5]).unwrap();
        let back = decode(&encode_pgm(&img, BitDepth::Sixteen)).unwrap();
        assert_eq!(back.data(), &[0.0, 1.0]);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.pgm", "a.png"] {
            let p = dir.path().join(name);
            save_image(&gradient(), &p).unwrap();
            let back = load_image(&p).unwrap();
            for (a, b) in gradient().data().iter().zip(back.data()) {
                assert!((a - b).abs() <= 1.0 / 65535.0);
            }
        }
        assert!(matches!(
            load_image(dir.path().join("missing.pgm")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn frames_sorted_numerically() {
        assert_eq!(frame_number("frame_0012"), Some(12));
        assert_eq!(frame_number("cam2_frame10"), Some(10));
        assert_eq!(frame_number("still"), None);
        let dir = tempfile::tempdir().unwrap();
        for name in ["f10.pgm", "f2.pgm", "f1.png", "notes.txt", "z.pgm"] {
            std::fs::write(dir.path().join(name), b"").unwrap();
        }
        let names: Vec<String> = list_frames(dir.path())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["f1.png", "f2.pgm", "f10.pgm", "z.pgm"]);
    }
}
