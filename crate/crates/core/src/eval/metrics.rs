use crate::error::{Error, Result};
use crate::image::RgbImage;

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 999.0;

/// Sum of squared channel errors and the number of channel samples.
pub fn squared_error(a: &RgbImage, b: &RgbImage) -> Result<(u64, u64)> {
    if !a.same_size(b) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sse = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .flat_map(|(p, q)| (0..3).map(move |c| u64::from(p[c].abs_diff(q[c])).pow(2)))
        .sum();
    Ok((sse, a.area() as u64 * 3))
}

/// PSNR from a pooled squared error, capped at [`PSNR_CAP`].
pub fn psnr_from_sse(sse: u64, samples: u64) -> f64 {
    if sse == 0 || samples == 0 {
        return PSNR_CAP;
    }
    let mse = sse as f64 / samples as f64;
    (10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP)
}

/// PSNR with the MSE pooled over all pixels and channels.
pub fn psnr_rgb(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    let (sse, n) = squared_error(a, b)?;
    Ok(psnr_from_sse(sse, n))
}

pub fn bpp(payload_bytes: u64, width: u32, height: u32) -> f64 {
    8.0 * payload_bytes as f64 / (f64::from(width) * f64::from(height))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAverage {
    /// Mean of -log10(1 - s).
    pub mean_log: f64,
    /// `1 - 10^(-mean_log)`.
    pub score: f64,
}

/// Averages scores in [0, 1) in the -log10(1 - s) domain.
pub fn log_domain_average(scores: &[f64]) -> Result<LogAverage> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores to average".into()));
    }
    let mut sum = 0.0;
    for &s in scores {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::InvalidInput(format!("score {s} outside [0, 1)")));
        }
        sum += -(1.0 - s).log10();
    }
    let mean_log = sum / scores.len() as f64;
    Ok(LogAverage { mean_log, score: 1.0 - 10f64.powf(-mean_log) })
}
