//! Per-pixel three-stage cascade shared by encoder and decoder.

use super::context::{cmap_predict, gather_context, ContextPattern};
use super::palette::GlobalPalette;
use super::patterns::{merged_histogram, ColorHistogram, PatternStore};
use crate::error::{Error, Result};
use crate::image::{pack_rgb, unpack_rgb, Rgb, RgbImage};
use crate::range_coder::{
    AdaptiveModel, FrequencyTable, RangeDecoder, RangeEncoder, SymbolModel,
};

/// Residual alphabet: errors -255..=255.
pub const RESIDUAL_BINS: usize = 511;

/// Stage a pixel was coded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Pattern,
    Palette,
    Residual,
}

/// Stage 1 table: the merged histogram's colors in ascending order,
/// with ESC last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage1Table {
    pub colors: Vec<u32>,
    pub table: FrequencyTable,
}

impl Stage1Table {
    #[inline]
    pub fn escape_symbol(&self) -> usize {
        self.colors.len()
    }
}

/// Color counts from the histogram plus an escape weighted by the number
/// of distinct colors. `None` for an empty histogram, which skips Stage 1.
pub fn stage1_distribution(hist: &ColorHistogram) -> Option<Stage1Table> {
    if hist.is_empty() {
        return None;
    }
    let mut entries = hist.entries().to_vec();
    entries.sort_unstable_by_key(|e| e.0);
    let colors: Vec<u32> = entries.iter().map(|e| e.0).collect();
    let mut counts: Vec<u32> = entries.iter().map(|e| e.1).collect();
    counts.push(colors.len() as u32);
    let table = FrequencyTable::new(counts).expect("nonzero total");
    Some(Stage1Table { colors, table })
}

/// One adaptive residual histogram per channel, all bins starting at one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorHistograms {
    channels: [AdaptiveModel; 3],
}

impl Default for ErrorHistograms {
    fn default() -> Self {
        ErrorHistograms {
            channels: std::array::from_fn(|_| AdaptiveModel::new(RESIDUAL_BINS, 1)),
        }
    }
}

impl ErrorHistograms {
    pub fn channel(&self, ch: usize) -> &AdaptiveModel {
        &self.channels[ch]
    }

    pub fn serialize_into(&self, out: &mut Vec<u8>) {
        for m in &self.channels {
            for &c in m.counts() {
                out.extend_from_slice(&c.to_be_bytes());
            }
        }
    }
}

#[inline]
fn residual_symbol(actual: u8, predicted: u8) -> usize {
    (i32::from(actual) - i32::from(predicted) + 255) as usize
}

/// Adaptive state of the coder.
#[derive(Debug, Clone)]
pub struct ScfModel {
    pub patterns: PatternStore,
    pub palette: GlobalPalette,
    pub errors: ErrorHistograms,
}

impl ScfModel {
    pub fn new(palette: GlobalPalette) -> Self {
        ScfModel { patterns: PatternStore::new(), palette, errors: ErrorHistograms::default() }
    }

    /// Canonical dump of all tables; equal on both sides after every pixel.
    pub fn serialize_state(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.patterns.serialize_into(&mut out);
        self.palette.serialize_into(&mut out);
        self.errors.serialize_into(&mut out);
        out
    }

    fn update(&mut self, ctx: &ContextPattern, color: u32, stage: Stage) {
        self.patterns.update(ctx, color);
        if stage != Stage::Pattern {
            self.palette.observe(color);
        }
    }

    /// Runs `f` on the palette model with the `excluded` colors zeroed.
    /// Returns `None` if nothing is left to code with.
    fn with_exclusions<R>(
        &mut self,
        excluded: &[u32],
        f: impl FnOnce(&GlobalPalette, u64) -> R,
    ) -> Option<R> {
        if self.palette.is_empty() {
            return None;
        }
        let mut removed: Vec<(usize, u32)> = Vec::with_capacity(excluded.len());
        for &c in excluded {
            if let Some(i) = self.palette.position(c) {
                let n = self.palette.model().count(i);
                self.palette.model_mut().adjust(i, -i64::from(n));
                removed.push((i, n));
            }
        }
        let included = (self.palette.len() - removed.len()) as u64;
        let out = (included > 0).then(|| f(&self.palette, included));
        for (i, n) in removed {
            self.palette.model_mut().adjust(i, i64::from(n));
        }
        out
    }
}

/// Pixel-by-pixel SCF encoder over a working canvas.
pub struct ScfEncoder {
    model: ScfModel,
    coder: RangeEncoder,
    canvas: RgbImage,
}

impl ScfEncoder {
    pub fn new(canvas: RgbImage, palette: GlobalPalette) -> Self {
        ScfEncoder { model: ScfModel::new(palette), coder: RangeEncoder::new(), canvas }
    }

    pub fn model(&self) -> &ScfModel {
        &self.model
    }

    pub fn canvas(&self) -> &RgbImage {
        &self.canvas
    }

    pub fn coder_mut(&mut self) -> &mut RangeEncoder {
        &mut self.coder
    }

    /// Codes `actual` at (`x`, `y`) and writes it into the canvas.
    pub fn encode_pixel(&mut self, x: u32, y: u32, actual: Rgb) -> Result<Stage> {
        let ctx = gather_context(&self.canvas, x, y);
        let color = pack_rgb(actual);
        let hist = merged_histogram(&self.model.patterns, &ctx);
        let stage = self.code_stages(&ctx, &hist, color, actual)?;
        self.model.update(&ctx, color, stage);
        self.canvas.set(x, y, actual);
        Ok(stage)
    }

    fn code_stages(
        &mut self,
        ctx: &ContextPattern,
        hist: &ColorHistogram,
        color: u32,
        actual: Rgb,
    ) -> Result<Stage> {
        let mut excluded: &[u32] = &[];
        let s1 = stage1_distribution(hist);
        if let Some(t) = &s1 {
            match t.colors.binary_search(&color) {
                Ok(i) => {
                    self.coder.encode(&t.table, i)?;
                    return Ok(Stage::Pattern);
                }
                Err(_) => {
                    self.coder.encode(&t.table, t.escape_symbol())?;
                    excluded = &t.colors;
                }
            }
        }

        let coder = &mut self.coder;
        let hit = self.model.with_exclusions(excluded, |palette, included| {
            let model = palette.model();
            let total = model.total() + included;
            match palette.position(color).filter(|&i| model.count(i) > 0) {
                Some(i) => {
                    let (cum, freq) = model.span(i)?;
                    coder.encode_range(cum, freq, total)?;
                    Ok::<_, Error>(true)
                }
                None => {
                    coder.encode_range(model.total(), included, total)?;
                    Ok(false)
                }
            }
        });
        if let Some(hit) = hit {
            if hit? {
                return Ok(Stage::Palette);
            }
        }

        let pred = cmap_predict(ctx);
        for ch in 0..3 {
            let sym = residual_symbol(actual[ch], pred[ch]);
            self.coder.encode(self.model.errors.channel(ch), sym)?;
            self.model.errors.channels[ch].increment(sym, 1);
        }
        Ok(Stage::Residual)
    }

    pub fn finish(self) -> (Vec<u8>, RgbImage) {
        (self.coder.finish(), self.canvas)
    }
}

/// Mirror of [`ScfEncoder`].
pub struct ScfDecoder<'a> {
    model: ScfModel,
    coder: RangeDecoder<'a>,
    canvas: RgbImage,
}

impl<'a> ScfDecoder<'a> {
    pub fn new(coder: RangeDecoder<'a>, canvas: RgbImage, palette: GlobalPalette) -> Self {
        ScfDecoder { model: ScfModel::new(palette), coder, canvas }
    }

    pub fn model(&self) -> &ScfModel {
        &self.model
    }

    pub fn canvas(&self) -> &RgbImage {
        &self.canvas
    }

    pub fn decode_pixel(&mut self, x: u32, y: u32) -> Result<(Rgb, Stage)> {
        let ctx = gather_context(&self.canvas, x, y);
        let hist = merged_histogram(&self.model.patterns, &ctx);
        let (color, stage) = self.decode_stages(&ctx, &hist)?;
        self.model.update(&ctx, color, stage);
        let rgb = unpack_rgb(color);
        self.canvas.set(x, y, rgb);
        Ok((rgb, stage))
    }

    fn decode_stages(
        &mut self,
        ctx: &ContextPattern,
        hist: &ColorHistogram,
    ) -> Result<(u32, Stage)> {
        let mut excluded: &[u32] = &[];
        let s1 = stage1_distribution(hist);
        if let Some(t) = &s1 {
            let sym = self.coder.decode(&t.table)?;
            if sym < t.colors.len() {
                return Ok((t.colors[sym], Stage::Pattern));
            }
            excluded = &t.colors;
        }

        let coder = &mut self.coder;
        let hit = self.model.with_exclusions(excluded, |palette, included| {
            let model = palette.model();
            let total = model.total() + included;
            let target = coder.decode_target(total)?;
            if target < model.total() {
                let (i, cum, freq) = model.locate(target);
                coder.consume(cum, freq, total)?;
                Ok::<_, Error>(Some(palette.color_at(i)))
            } else {
                coder.consume(model.total(), included, total)?;
                Ok(None)
            }
        });
        if let Some(hit) = hit {
            if let Some(color) = hit? {
                return Ok((color, Stage::Palette));
            }
        }

        let pred = cmap_predict(ctx);
        let mut rgb = [0u8; 3];
        for ch in 0..3 {
            let sym = self.coder.decode(self.model.errors.channel(ch))?;
            let v = i32::from(pred[ch]) + sym as i32 - 255;
            if !(0..=255).contains(&v) {
                return Err(Error::Corrupt(format!("residual leaves channel range: {v}")));
            }
            rgb[ch] = v as u8;
            self.model.errors.channels[ch].increment(sym, 1);
        }
        Ok((pack_rgb(rgb), Stage::Residual))
    }

    pub fn coder_mut(&mut self) -> &mut RangeDecoder<'a> {
        &mut self.coder
    }

    pub fn finish(self) -> Result<RgbImage> {
        self.coder.finish()?;
        Ok(self.canvas)
    }
}
