//! Full-reference quality metrics and the evaluation report.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::io::load_image;

pub fn mse(x: &GrayImage, reference: &GrayImage) -> Result<f64> {
    x.ensure_same_dims(reference)?;
    let sum: f64 = x
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.len() as f64)
}

/// Peak signal-to-noise ratio in dB for a dynamic range of 1. Identical
/// images give `f64::INFINITY`.
pub fn psnr(x: &GrayImage, reference: &GrayImage) -> Result<f64> {
    let m = mse(x, reference)?;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * m.log10()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    /// Odd side of the Gaussian window.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::invalid(format!(
                "SSIM window must be odd, got {}",
                self.window
            )));
        }
        if !(self.sigma > 0.0 && self.k1 > 0.0 && self.k2 > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::invalid(
                "SSIM sigma, k1, k2 and dynamic range must be > 0",
            ));
        }
        Ok(())
    }

    /// Normalized 1-D Gaussian taps; the window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let g: Vec<f64> = (0..self.window)
            .map(|i| (-(i as f64 - r).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let s: f64 = g.iter().sum();
        g.into_iter().map(|v| v / s).collect()
    }
}

/// Separable weighted sum over every full window position.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&src[x..x + n]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (i, t) in taps.iter().enumerate() {
            let src = &rows[(y + i) * ow..(y + i + 1) * ow];
            out[y * ow..(y + 1) * ow]
                .iter_mut()
                .zip(src)
                .for_each(|(o, v)| *o += t * v);
        }
    }
    out
}

/// Local SSIM at every position where the window fits inside the image.
pub fn ssim_map(x: &GrayImage, reference: &GrayImage, cfg: &SsimConfig) -> Result<GrayImage> {
    cfg.validate()?;
    x.ensure_same_dims(reference)?;
    let (w, h) = x.dims();
    if w < cfg.window || h < cfg.window {
        return Err(Error::invalid(format!(
            "SSIM needs at least {0}x{0} pixels, got {w}x{h}",
            cfg.window
        )));
    }
    let taps = cfg.taps();
    let (a, b) = (x.data(), reference.data());
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        a.iter().zip(b).map(|(&p, &q)| f(p, q)).collect()
    };
    let mu_a = filter_valid(a, w, h, &taps);
    let mu_b = filter_valid(b, w, h, &taps);
    let aa = filter_valid(&prod(&|p, _| p * p), w, h, &taps);
    let bb = filter_valid(&prod(&|_, q| q * q), w, h, &taps);
    let ab = filter_valid(&prod(&|p, q| p * q), w, h, &taps);
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);
    let map = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect();
    GrayImage::new(w - cfg.window + 1, h - cfg.window + 1, map)
}

/// Mean of [`ssim_map`].
pub fn ssim(x: &GrayImage, reference: &GrayImage, cfg: &SsimConfig) -> Result<f64> {
    Ok(ssim_map(x, reference, cfg)?.mean())
}

/// One line of an evaluation manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub pair_id: String,
    pub method: String,
    pub deblurred: PathBuf,
    pub reference: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub pair_id: String,
    pub method: String,
    pub psnr_db: f64,
    pub ssim: f64,
}

/// Reads a JSON-lines manifest of [`EvalPair`]. Relative image paths are
/// resolved against the manifest's directory.
pub fn read_eval_manifest(path: &Path) -> Result<Vec<EvalPair>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut p: EvalPair = serde_json::from_str(line).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
            if p.deblurred.is_relative() {
                p.deblurred = base.join(&p.deblurred);
            }
            if p.reference.is_relative() {
                p.reference = base.join(&p.reference);
            }
            Ok(p)
        })
        .collect()
}

pub fn evaluate_pairs(pairs: &[EvalPair], cfg: &SsimConfig) -> Result<Vec<EvalRow>> {
    pairs
        .par_iter()
        .map(|p| {
            let x = load_image(&p.deblurred)?;
            let r = load_image(&p.reference)?;
            Ok(EvalRow {
                pair_id: p.pair_id.clone(),
                method: p.method.clone(),
                psnr_db: psnr(&x, &r)?,
                ssim: ssim(&x, &r, cfg)?,
            })
        })
        .collect()
}

/// Scores produced by external tools, keyed by `(pair_id, method)`. The file
/// is a CSV whose first two columns are `pair_id,method`; the remaining
/// columns are carried over verbatim.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores {
    pub columns: Vec<String>,
    pub rows: HashMap<(String, String), Vec<String>>,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    }
}

impl ExternalScores {
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.len() < 2 || &headers[0] != "pair_id" || &headers[1] != "method" {
            return Err(Error::invalid(format!(
                "{}: external score file must start with pair_id,method",
                path.display()
            )));
        }
        let columns = headers.iter().skip(2).map(str::to_owned).collect();
        let mut rows = HashMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let key = (rec[0].to_owned(), rec[1].to_owned());
            rows.insert(key, rec.iter().skip(2).map(str::to_owned).collect());
        }
        Ok(Self { columns, rows })
    }
}

/// Writes `pair_id,method,psnr_db,ssim` plus any external columns (blank
/// where a row has no external entry).
pub fn write_eval_csv(
    rows: &[EvalRow],
    external: Option<&ExternalScores>,
    path: &Path,
) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec![
        "pair_id".to_owned(),
        "method".into(),
        "psnr_db".into(),
        "ssim".into(),
    ];
    if let Some(ext) = external {
        header.extend(ext.columns.iter().cloned());
    }
    wtr.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        let mut rec = vec![
            r.pair_id.clone(),
            r.method.clone(),
            r.psnr_db.to_string(),
            r.ssim.to_string(),
        ];
        if let Some(ext) = external {
            match ext.rows.get(&(r.pair_id.clone(), r.method.clone())) {
                Some(vals) => rec.extend(vals.iter().cloned()),
                None => rec.extend(std::iter::repeat(String::new()).take(ext.columns.len())),
            }
        }
        wtr.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}
