//! Block features predicting how well the SCF coder handles a CTU.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::image::{pack_rgb, RgbImage};
use crate::scf::gather_context;

pub const FEATURE_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockFeatures {
    /// Distinct colors per pixel.
    pub colors_norm: f64,
    /// Distinct (A, B, X) triples per pixel.
    pub patterns_norm: f64,
    /// Color entropy over pixels whose triple is new, in bits.
    pub stage23_color_entropy: f64,
    /// H(X | A, B) in bits.
    pub conditional_entropy: f64,
}

impl BlockFeatures {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [self.colors_norm, self.patterns_norm, self.stage23_color_entropy, self.conditional_entropy]
    }

    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Self {
        BlockFeatures {
            colors_norm: v[0],
            patterns_norm: v[1],
            stage23_color_entropy: v[2],
            conditional_entropy: v[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternStats {
    pub distinct_patterns: usize,
    /// Raster indices of pixels whose (A, B, X) triple occurs for the
    /// first time; these are the pixels expected to leave Stage 1.
    pub first_occurrence: Vec<usize>,
    pub conditional_entropy: f64,
}

fn entropy_of_counts(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let h: f64 = counts.map(|n| n as f64 / t).map(|p| -p * p.log2()).sum();
    h.max(0.0)
}

/// Statistics of the simplified pattern {A, B, X}.
pub fn simplified_pattern_stats(block: &RgbImage) -> PatternStats {
    let mut triples: FxHashMap<(u32, u32, u32), u64> = FxHashMap::default();
    let mut contexts: FxHashMap<(u32, u32), u64> = FxHashMap::default();
    let mut first_occurrence = Vec::new();
    let mut i = 0usize;
    for y in 0..block.height() {
        for x in 0..block.width() {
            let ctx = gather_context(block, x, y);
            let ab = (pack_rgb(ctx.a()), pack_rgb(ctx.b()));
            let key = (ab.0, ab.1, pack_rgb(block.get(x, y)));
            let n = triples.entry(key).or_insert(0);
            if *n == 0 {
                first_occurrence.push(i);
            }
            *n += 1;
            *contexts.entry(ab).or_insert(0) += 1;
            i += 1;
        }
    }

    // H(X|AB) = sum over (ab, x) of p(ab, x) log2(n(ab) / n(ab, x))
    let total = block.area() as f64;
    let mut entries: Vec<(&(u32, u32, u32), &u64)> = triples.iter().collect();
    entries.sort_unstable_by_key(|e| *e.0);
    let h: f64 = entries
        .iter()
        .map(|(&(a, b, _), &n)| {
            let nab = contexts[&(a, b)] as f64;
            n as f64 / total * (nab / n as f64).log2()
        })
        .sum();

    PatternStats {
        distinct_patterns: triples.len(),
        first_occurrence,
        conditional_entropy: h.max(0.0),
    }
}

pub fn extract_features(block: &RgbImage) -> BlockFeatures {
    let area = block.area() as f64;
    let colors: FxHashSet<u32> = block.pixels().iter().map(|&p| pack_rgb(p)).collect();
    let stats = simplified_pattern_stats(block);

    let mut first_colors: FxHashMap<u32, u64> = FxHashMap::default();
    for &i in &stats.first_occurrence {
        *first_colors.entry(pack_rgb(block.pixels()[i])).or_insert(0) += 1;
    }
    let mut counts: Vec<(u32, u64)> = first_colors.into_iter().collect();
    counts.sort_unstable();
    let stage23 =
        entropy_of_counts(counts.iter().map(|c| c.1), stats.first_occurrence.len() as u64);

    BlockFeatures {
        colors_norm: colors.len() as f64 / area,
        patterns_norm: stats.distinct_patterns as f64 / area,
        stage23_color_entropy: stage23,
        conditional_entropy: stats.conditional_entropy,
    }
}
