//! Soft-context-formation lossless coder.
//!
//! Pixels are coded in raster order through three stages: a color
//! distribution from the histograms of similar neighbor patterns, a
//! global palette, and channel-wise residual coding after median-adaptive
//! prediction. When a base layer is present the working canvas is
//! pre-filled with its reconstruction, so templates and predictions that
//! reach into base-layer CTUs read decoded base pixels, and the palette is
//! seeded from a prefix of the base layer's own palette.
//!
//! Payload: the palette prefix shift `b` as one symbol of a uniform
//! 8-ary table (3 bits of information), then the pixel symbols, then the
//! eight-byte coder flush. The payload is not self-delimiting.

pub mod context;
pub mod model;
pub mod palette;
pub mod patterns;

pub use context::{cmap_predict, gather_context, ContextPattern, DEFAULT_COLOR};
pub use model::{
    stage1_distribution, ErrorHistograms, ScfDecoder, ScfEncoder, ScfModel, Stage, Stage1Table,
};
pub use palette::{
    base_layer_palette, init_palette, scf_layer_colors, select_palette_prefix,
    stage2_distribution, GlobalPalette, PalettePrefixChoice,
};
pub use patterns::{merged_histogram, ColorHistogram, PatternStore, SIMILARITY_THRESHOLD};

use crate::error::{Error, Result};
use crate::image::{check_mask, CtuGrid, Label, RgbImage, SegmentationMask};
use crate::range_coder::{FrequencyTable, RangeDecoder};

fn shift_table() -> FrequencyTable {
    FrequencyTable::uniform(8)
}

/// Canvas used when there is no base layer.
pub fn neutral_canvas(width: u32, height: u32) -> Result<RgbImage> {
    RgbImage::new(width, height, DEFAULT_COLOR)
}

fn check_inputs(image: &RgbImage, mask: &SegmentationMask, base: &RgbImage) -> Result<()> {
    if !image.same_size(base) {
        return Err(Error::DimensionMismatch("image and base reconstruction differ".into()));
    }
    check_mask(image, mask)
}

/// Codes every pixel of the SCF CTUs of `image`.
pub fn scf_encode_layer(
    image: &RgbImage,
    mask: &SegmentationMask,
    base_recon: &RgbImage,
) -> Result<Vec<u8>> {
    Ok(scf_encode_layer_traced(image, mask, base_recon, |_, _, _| {})?.0)
}

/// [`scf_encode_layer`] reporting the stage of each coded pixel. Also
/// returns the palette prefix choice.
pub fn scf_encode_layer_traced(
    image: &RgbImage,
    mask: &SegmentationMask,
    base_recon: &RgbImage,
    mut trace: impl FnMut(u32, u32, Stage),
) -> Result<(Vec<u8>, PalettePrefixChoice)> {
    check_inputs(image, mask, base_recon)?;
    let base_palette = base_layer_palette(base_recon, mask);
    let choice = select_palette_prefix(&scf_layer_colors(image, mask), &base_palette);
    let palette = init_palette(&choice, mask.grid().ctu_size);

    let mut enc = ScfEncoder::new(base_recon.clone(), palette);
    enc.coder_mut().encode(&shift_table(), usize::from(choice.b))?;
    for y in 0..image.height() {
        for x in 0..image.width() {
            if mask.label_at(x, y) == Label::Scf {
                let stage = enc.encode_pixel(x, y, image.get(x, y))?;
                trace(x, y, stage);
            }
        }
    }
    Ok((enc.finish().0, choice))
}

/// Decodes the SCF CTUs on top of `base_recon`. Pixels outside SCF CTUs
/// are returned unchanged from `base_recon`.
pub fn scf_decode_layer(
    payload: &[u8],
    mask: &SegmentationMask,
    base_recon: &RgbImage,
) -> Result<RgbImage> {
    check_mask(base_recon, mask)?;
    let mut coder = RangeDecoder::new(payload)?;
    let b = coder.decode(&shift_table())? as u8;
    let base_palette = base_layer_palette(base_recon, mask);
    let choice = PalettePrefixChoice::from_shift(b, &base_palette);
    let palette = init_palette(&choice, mask.grid().ctu_size);

    let mut dec = ScfDecoder::new(coder, base_recon.clone(), palette);
    for y in 0..base_recon.height() {
        for x in 0..base_recon.width() {
            if mask.label_at(x, y) == Label::Scf {
                dec.decode_pixel(x, y)?;
            }
        }
    }
    dec.finish()
}

/// Lossless standalone coding of a whole image.
pub fn scf_encode_image(image: &RgbImage, ctu_size: u32) -> Result<Vec<u8>> {
    let grid = CtuGrid::for_image(image, ctu_size)?;
    let mask = SegmentationMask::uniform(grid, Label::Scf);
    scf_encode_layer(image, &mask, &neutral_canvas(image.width(), image.height())?)
}

pub fn scf_decode_image(payload: &[u8], width: u32, height: u32, ctu_size: u32) -> Result<RgbImage> {
    let grid = CtuGrid::new(width, height, ctu_size)?;
    let mask = SegmentationMask::uniform(grid, Label::Scf);
    scf_decode_layer(payload, &mask, &neutral_canvas(width, height)?)
}

/// Exact size in bits of coding `block` on its own.
pub fn estimate_scf_rate(block: &RgbImage) -> Result<u64> {
    let ctu = block.width().max(block.height());
    Ok(scf_encode_image(block, ctu)?.len() as u64 * 8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::pack_rgb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: u32, h: u32, seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RgbImage::from_fn(w, h, |_, _| rng.gen()).unwrap()
    }

    fn two_color_text(w: u32, h: u32) -> RgbImage {
        // strokes of a fixed 6x8 glyph cell pattern
        let glyphs: [u64; 4] = [0x1c22_2232_2a26_221c, 0x0818_0808_0808_081c, 0x1c22_0204_0810_203e, 0x3e02_041c_0202_221c];
        RgbImage::from_fn(w, h, |x, y| {
            let (cx, cy) = (x / 6, y / 10);
            let (gx, gy) = (x % 6, y % 10);
            let g = glyphs[((cx * 7 + cy * 3) % 4) as usize];
            let on = gy < 8 && gx < 6 && (g >> ((7 - gy) * 8 + (5 - gx))) & 1 == 1;
            if on { [20, 20, 60] } else { [250, 250, 245] }
        })
        .unwrap()
    }

    #[test]
    fn all_scf_round_trip() {
        for (img, ctu) in [
            (noise(37, 23, 1), 16),
            (two_color_text(64, 48), 128),
            (RgbImage::new(1, 1, [4, 5, 6]).unwrap(), 128),
        ] {
            let bytes = scf_encode_image(&img, ctu).unwrap();
            let back = scf_decode_image(&bytes, img.width(), img.height(), ctu).unwrap();
            assert_eq!(back, img);
        }
    }

    #[test]
    fn single_color_block_is_tiny() {
        let img = RgbImage::new(128, 128, [12, 200, 99]).unwrap();
        let bytes = scf_encode_image(&img, 128).unwrap();
        assert!(bytes.len() < 40, "{} bytes", bytes.len());
        assert!(estimate_scf_rate(&img).unwrap() < 320);
    }

    #[test]
    fn text_block_under_one_bpp() {
        let img = two_color_text(128, 128);
        let bpp = scf_encode_image(&img, 128).unwrap().len() as f64 * 8.0 / (128.0 * 128.0);
        assert!(bpp < 1.0, "{bpp}");
    }

    #[test]
    fn noise_is_expensive() {
        let img = noise(128, 128, 9);
        let bits = estimate_scf_rate(&img).unwrap();
        assert!(bits as f64 > 20.0 * 16384.0 * 0.8, "{bits}");
        assert!(estimate_scf_rate(&two_color_text(128, 128)).unwrap() < bits);
    }

    #[test]
    fn empty_layer_has_only_shift_and_flush() {
        let img = noise(20, 20, 2);
        let mask = SegmentationMask::uniform(CtuGrid::new(20, 20, 8).unwrap(), Label::Base);
        let bytes = scf_encode_layer(&img, &mask, &img).unwrap();
        assert_eq!(bytes.len(), 8);
        assert_eq!(scf_decode_layer(&bytes, &mask, &img).unwrap(), img);
    }

    #[test]
    fn mixed_mask_reads_base_pixels() {
        let img = two_color_text(48, 32);
        let grid = CtuGrid::new(48, 32, 16).unwrap();
        let labels = (0..grid.len()).map(|i| if i % 2 == 0 { Label::Scf } else { Label::Base }).collect();
        let mask = SegmentationMask::new(grid, labels).unwrap();
        let base = RgbImage::from_fn(48, 32, |x, y| [x as u8, y as u8, 77]).unwrap();
        let bytes = scf_encode_layer(&img, &mask, &base).unwrap();
        let out = scf_decode_layer(&bytes, &mask, &base).unwrap();
        for y in 0..32 {
            for x in 0..48 {
                let want = if mask.label_at(x, y) == Label::Scf { img.get(x, y) } else { base.get(x, y) };
                assert_eq!(out.get(x, y), want);
            }
        }
        // first pixel of CTU 2 sits right of BASE CTU 1: template reads base
        let mut canvas = base.clone();
        for y in 0..32 {
            for x in 0..48 {
                if mask.label_at(x, y) == Label::Scf && (y, x) < (0, 32) {
                    canvas.set(x, y, img.get(x, y));
                }
            }
        }
        let ctx = gather_context(&canvas, 32, 0);
        assert_eq!(ctx.a(), [31, 0, 77]);
        assert_eq!(ctx.values[4], [30, 0, 77]);
    }

    #[test]
    fn palette_prefix_is_used_when_colors_match() {
        let img = two_color_text(64, 32);
        let grid = CtuGrid::new(64, 32, 32).unwrap();
        let mask = SegmentationMask::new(grid, vec![Label::Scf, Label::Base]).unwrap();
        let (_, choice) = scf_encode_layer_traced(&img, &mask, &img, |_, _, _| {}).unwrap();
        assert_eq!(choice.b, 0);
        assert!(choice.prefix.iter().any(|&(c, _)| c == pack_rgb([250, 250, 245])));
    }

    #[test]
    fn truncated_payload_errors() {
        let img = noise(16, 16, 4);
        let bytes = scf_encode_image(&img, 16).unwrap();
        for cut in [0, 3, bytes.len() / 2, bytes.len() - 1] {
            assert!(scf_decode_image(&bytes[..cut], 16, 16, 16).is_err());
        }
    }
}
