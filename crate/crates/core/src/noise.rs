//! Additive white Gaussian noise calibrated by SNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// SNR in decibels, `10 log10(mean(x^2) / noise variance)`, plus the RNG
/// seed. `f64::INFINITY` disables noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        Self { snr_db, seed }
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }

    /// Noise variance for an image of the given signal power.
    pub fn noise_variance(&self, signal_power: f64) -> f64 {
        signal_power / 10f64.powf(self.snr_db / 10.0)
    }
}

/// Adds white Gaussian noise whose variance gives `spec.snr_db` against the
/// image's mean squared value. Deterministic for a given seed.
pub fn add_awgn(image: &GrayImage, spec: NoiseSpec) -> Result<GrayImage> {
    if spec.snr_db.is_nan() || spec.snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("invalid SNR {}", spec.snr_db)));
    }
    if spec.snr_db == f64::INFINITY {
        return Ok(image.clone());
    }
    let power = image.power();
    if power == 0.0 {
        return Err(Error::invalid("SNR is undefined for an all-zero image"));
    }
    let sigma = spec.noise_variance(power).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    image.map(|v| v + normal.sample(&mut rng))
}
