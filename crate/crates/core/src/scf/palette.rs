//! Global color palette (Stage 2) and its initialization from the base layer.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::image::{pack_rgb, Label, RgbImage, SegmentationMask};
use crate::range_coder::{AdaptiveModel, FrequencyTable};

/// Largest signalable prefix shift; `b == NO_PREFIX` means no prefix.
pub const MAX_PREFIX_SHIFT: u8 = 6;
pub const NO_PREFIX: u8 = 7;

/// Colors and counts in insertion order.
#[derive(Debug, Clone, Default)]
pub struct GlobalPalette {
    colors: Vec<u32>,
    index: FxHashMap<u32, u32>,
    model: AdaptiveModel,
}

impl PartialEq for GlobalPalette {
    fn eq(&self, other: &Self) -> bool {
        self.colors == other.colors && self.model == other.model
    }
}

impl GlobalPalette {
    pub fn new() -> Self {
        GlobalPalette {
            colors: Vec::new(),
            index: FxHashMap::default(),
            model: AdaptiveModel::new(0, 0),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut p = Self::new();
        for (c, n) in entries {
            assert!(n > 0, "palette counts must be positive");
            match p.index.get(&c) {
                Some(&i) => p.model.adjust(i as usize, i64::from(n)),
                None => {
                    p.index.insert(c, p.colors.len() as u32);
                    p.colors.push(c);
                    p.model.push(n);
                }
            }
        }
        p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn count(&self, color: u32) -> u32 {
        self.index.get(&color).map_or(0, |&i| self.model.count(i as usize))
    }

    pub fn position(&self, color: u32) -> Option<usize> {
        self.index.get(&color).map(|&i| i as usize)
    }

    pub fn color_at(&self, idx: usize) -> u32 {
        self.colors[idx]
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.colors.iter().zip(self.model.counts()).map(|(&c, &n)| (c, n))
    }

    pub(crate) fn model(&self) -> &AdaptiveModel {
        &self.model
    }

    pub(crate) fn model_mut(&mut self) -> &mut AdaptiveModel {
        &mut self.model
    }

    /// Counts one more occurrence of `color`.
    pub fn observe(&mut self, color: u32) {
        match self.index.get(&color) {
            Some(&i) => self.model.increment(i as usize, 1),
            None => {
                self.index.insert(color, self.colors.len() as u32);
                self.colors.push(color);
                self.model.push(1);
            }
        }
    }

    pub fn serialize_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.len() as u32).to_be_bytes());
        for (c, n) in self.entries() {
            out.extend_from_slice(&c.to_be_bytes());
            out.extend_from_slice(&n.to_be_bytes());
        }
    }
}

/// Stage 2 table: palette colors outside `excluded` with their counts,
/// in palette order, followed by ESC weighted by the number of included
/// colors. `None` when no palette color survives the exclusion.
pub fn stage2_distribution(palette: &GlobalPalette, excluded: &[u32]) -> Option<FrequencyTable> {
    let mut counts: Vec<u32> = palette
        .entries()
        .map(|(c, n)| if excluded.contains(&c) { 0 } else { n })
        .collect();
    let included = counts.iter().filter(|&&n| n > 0).count();
    if included == 0 {
        return None;
    }
    counts.push(included as u32);
    Some(FrequencyTable::new(counts).expect("nonzero total"))
}

/// Palette of a decoded base layer restricted to BASE CTUs, sorted by
/// descending count and then ascending packed color.
pub fn base_layer_palette(recon: &RgbImage, mask: &SegmentationMask) -> Vec<(u32, u64)> {
    let mut counts: FxHashMap<u32, u64> = FxHashMap::default();
    for (i, rect) in mask.grid().rects() {
        if mask.labels()[i] != Label::Base {
            continue;
        }
        for y in rect.y..rect.y + rect.height {
            for x in rect.x..rect.x + rect.width {
                *counts.entry(pack_rgb(recon.get(x, y))).or_insert(0) += 1;
            }
        }
    }
    let mut v: Vec<(u32, u64)> = counts.into_iter().collect();
    v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// Distinct colors inside SCF CTUs of `image`.
pub fn scf_layer_colors(image: &RgbImage, mask: &SegmentationMask) -> FxHashSet<u32> {
    let mut set = FxHashSet::default();
    for (i, rect) in mask.grid().rects() {
        if mask.labels()[i] != Label::Scf {
            continue;
        }
        for y in rect.y..rect.y + rect.height {
            for x in rect.x..rect.x + rect.width {
                set.insert(pack_rgb(image.get(x, y)));
            }
        }
    }
    set
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PalettePrefixChoice {
    pub b: u8,
    /// Leading base-palette entries `(color, base count)`.
    pub prefix: Vec<(u32, u64)>,
}

impl PalettePrefixChoice {
    pub fn none() -> Self {
        PalettePrefixChoice { b: NO_PREFIX, prefix: Vec::new() }
    }

    /// Rebuilds the choice the decoder sees from the signaled `b`.
    pub fn from_shift(b: u8, base_palette: &[(u32, u64)]) -> Self {
        if b > MAX_PREFIX_SHIFT {
            return Self::none();
        }
        PalettePrefixChoice { b, prefix: base_palette[..base_palette.len() >> b].to_vec() }
    }
}

/// Picks the prefix of the base palette that best overlaps the SCF layer's
/// colors. Falls back to no prefix when the best overlap is below 90 %.
pub fn select_palette_prefix(
    scf_colors: &FxHashSet<u32>,
    base_palette: &[(u32, u64)],
) -> PalettePrefixChoice {
    // (b, hits, size) of the best score so far
    let mut best: Option<(u8, u64, u64)> = None;
    for b in 0..=MAX_PREFIX_SHIFT {
        let size = (base_palette.len() >> b) as u64;
        let hits = base_palette[..size as usize]
            .iter()
            .filter(|(c, _)| scf_colors.contains(c))
            .count() as u64;
        // empty prefixes score 0
        let better = match best {
            None => true,
            Some((_, bh, bs)) => {
                let (h, s) = if size == 0 { (0, 1) } else { (hits, size) };
                let (bh, bs) = if bs == 0 { (0, 1) } else { (bh, bs) };
                h * bs > bh * s
            }
        };
        if better {
            best = Some((b, hits, size));
        }
    }
    match best {
        Some((b, hits, size)) if size > 0 && hits * 10 >= size * 9 => {
            PalettePrefixChoice::from_shift(b, base_palette)
        }
        _ => PalettePrefixChoice::none(),
    }
}

/// Seeds a palette with the prefix colors, scaling counts by the CTU width.
pub fn init_palette(choice: &PalettePrefixChoice, ctu_width: u32) -> GlobalPalette {
    let w = u64::from(ctu_width.max(1));
    GlobalPalette::from_entries(choice.prefix.iter().map(|&(c, n)| {
        let scaled = ((n + w / 2) / w).clamp(1, u64::from(u32::MAX >> 8));
        (c, scaled as u32)
    }))
}
