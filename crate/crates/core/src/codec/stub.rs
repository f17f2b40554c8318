use super::BaseCodec;
use crate::error::{Error, Result};
use crate::image::{check_dimensions, RgbImage};
use crate::range_coder::{AdaptiveModel, RangeDecoder, RangeEncoder};

/// Quantizer step for a quality level: `round(2^((q - 4) / 6))`, at
/// least 1 and at most 255.
pub fn quant_step(quality: u8) -> u8 {
    let step = 2f64.powf((f64::from(quality) - 4.0) / 6.0).round();
    step.clamp(1.0, 255.0) as u8
}

/// Uniform scalar quantization followed by lossless MED-predictive coding
/// of the quantizer indices. Stands in for a real lossy codec.
///
/// Payload: width (u32 BE), height (u32 BE), step (u8), range-coded
/// residuals of the index planes, pixel-interleaved.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubLossyCodec;

const HEADER_LEN: usize = 9;

fn max_index(step: u8) -> i32 {
    (255 + i32::from(step) / 2) / i32::from(step)
}

#[inline]
fn quantize(v: u8, step: u8) -> i32 {
    (i32::from(v) + i32::from(step) / 2) / i32::from(step)
}

#[inline]
fn dequantize(idx: i32, step: u8) -> u8 {
    (idx * i32::from(step)).min(255) as u8
}

#[inline]
fn med(a: i32, b: i32, c: i32) -> i32 {
    if c >= a.max(b) {
        a.min(b)
    } else if c <= a.min(b) {
        a.max(b)
    } else {
        a + b - c
    }
}

/// Prediction of index plane `plane` (row-major, `w` wide) at (x, y).
#[inline]
fn predict(plane: &[i32], w: usize, x: usize, y: usize) -> i32 {
    let at = |x: usize, y: usize| plane[(y * w + x) * 3];
    match (x > 0, y > 0) {
        (false, false) => 0,
        (true, false) => at(x - 1, y),
        (false, true) => at(x, y - 1),
        (true, true) => med(at(x - 1, y), at(x, y - 1), at(x - 1, y - 1)),
    }
}

fn header_dims(payload: &[u8]) -> Result<(u32, u32)> {
    if payload.len() < HEADER_LEN {
        return Err(Error::Truncated);
    }
    let width = u32::from_be_bytes(payload[0..4].try_into().unwrap());
    let height = u32::from_be_bytes(payload[4..8].try_into().unwrap());
    Ok((width, height))
}

impl BaseCodec for StubLossyCodec {
    fn id(&self) -> u8 {
        0
    }

    fn name(&self) -> &'static str {
        "stub"
    }

    fn encode(&self, image: &RgbImage, quality: u8) -> Result<Vec<u8>> {
        let step = quant_step(quality);
        let maxi = max_index(step);
        let (w, h) = (image.width() as usize, image.height() as usize);
        let bins = (2 * maxi + 1) as usize;
        let mut models: [AdaptiveModel; 3] = std::array::from_fn(|_| AdaptiveModel::new(bins, 1));
        let mut plane = vec![0i32; w * h * 3];
        let mut enc = RangeEncoder::new();
        for y in 0..h {
            for x in 0..w {
                let px = image.get(x as u32, y as u32);
                for ch in 0..3 {
                    let q = quantize(px[ch], step);
                    let pred = predict(&plane[ch..], w, x, y);
                    let sym = (q - pred + maxi) as usize;
                    enc.encode(&models[ch], sym)?;
                    models[ch].increment(sym, 1);
                    plane[(y * w + x) * 3 + ch] = q;
                }
            }
        }
        let mut out = Vec::with_capacity(HEADER_LEN + enc.bytes_written() + 8);
        out.extend_from_slice(&image.width().to_be_bytes());
        out.extend_from_slice(&image.height().to_be_bytes());
        out.push(step);
        out.extend_from_slice(&enc.finish());
        Ok(out)
    }

    fn decode_sized(&self, payload: &[u8], width: u32, height: u32) -> Result<RgbImage> {
        let (w, h) = header_dims(payload)?;
        if (w, h) != (width, height) {
            return Err(Error::DimensionMismatch(format!(
                "base layer holds {w}x{h}, expected {width}x{height}"
            )));
        }
        self.decode(payload)
    }

    fn decode(&self, payload: &[u8]) -> Result<RgbImage> {
        let (width, height) = header_dims(payload)?;
        let step = payload[8];
        check_dimensions(width.into(), height.into())?;
        if step == 0 {
            return Err(Error::Corrupt("zero quantizer step".into()));
        }
        let maxi = max_index(step);
        let (w, h) = (width as usize, height as usize);
        let bins = (2 * maxi + 1) as usize;
        let mut models: [AdaptiveModel; 3] = std::array::from_fn(|_| AdaptiveModel::new(bins, 1));
        let mut plane = vec![0i32; w * h * 3];
        let mut dec = RangeDecoder::new(&payload[HEADER_LEN..])?;
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let mut px = [0u8; 3];
                for ch in 0..3 {
                    let sym = dec.decode(&models[ch])?;
                    models[ch].increment(sym, 1);
                    let pred = predict(&plane[ch..], w, x, y);
                    let q = pred + sym as i32 - maxi;
                    if !(0..=maxi).contains(&q) {
                        return Err(Error::Corrupt(format!("quantizer index {q} out of range")));
                    }
                    plane[(y * w + x) * 3 + ch] = q;
                    px[ch] = dequantize(q, step);
                }
                pixels.push(px);
            }
        }
        dec.finish()?;
        RgbImage::from_pixels(width, height, pixels)
    }
}
