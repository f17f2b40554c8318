//! Pattern store: context patterns mapped to the colors that followed them.

use rustc_hash::{FxHashMap, FxHashSet};

use super::context::{ContextPattern, PatternKey};
use crate::range_coder::COUNT_CAP;

/// Similarity threshold of the escalation pass.
pub const SIMILARITY_THRESHOLD: u32 = 12;

// Coarse index: per template position, the channel sum in bins of
// BIN_WIDTH. Bins fit in BIN_BITS bits, six of them in a u64 key.
const BIN_WIDTH: u32 = 32;
const MAX_BIN: u32 = 765 / BIN_WIDTH;
const BIN_BITS: u32 = 5;

/// Color -> count map. Entries keep insertion order; merged histograms
/// are sorted by packed color.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColorHistogram {
    entries: Vec<(u32, u32)>,
    total: u64,
}

impl ColorHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut h = Self::new();
        for (c, n) in entries {
            h.add(c, n);
        }
        h
    }

    #[inline]
    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    #[inline]
    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, color: u32) -> u32 {
        self.entries.iter().find(|e| e.0 == color).map_or(0, |e| e.1)
    }

    pub fn contains(&self, color: u32) -> bool {
        self.entries.iter().any(|e| e.0 == color)
    }

    /// Adds `n` to `color`, inserting it if new. Zero adds are ignored.
    pub fn add(&mut self, color: u32, n: u32) {
        if n == 0 {
            return;
        }
        match self.entries.iter_mut().find(|e| e.0 == color) {
            Some(e) => e.1 += n,
            None => self.entries.push((color, n)),
        }
        self.total += u64::from(n);
    }

    /// Adaptive update: increments and halves once past the cap.
    fn observe(&mut self, color: u32) {
        self.add(color, 1);
        if self.total > COUNT_CAP.max(2 * self.entries.len() as u64) {
            for e in &mut self.entries {
                e.1 = e.1.div_ceil(2);
            }
            self.total = self.entries.iter().map(|e| u64::from(e.1)).sum();
        }
    }

    fn sort_by_color(&mut self) {
        self.entries.sort_unstable_by_key(|e| e.0);
    }
}

#[derive(Debug, Clone)]
struct StoredPattern {
    pattern: ContextPattern,
    hist: ColorHistogram,
}

#[derive(Debug, Clone, Default)]
pub struct PatternStore {
    patterns: Vec<StoredPattern>,
    exact: FxHashMap<PatternKey, u32>,
    // pattern values are copied into the buckets so scans stay sequential
    buckets: FxHashMap<u64, Vec<(ContextPattern, u32)>>,
    // key prefixes of the first 1..=5 positions, to prune empty subtrees
    prefixes: [FxHashSet<u64>; 5],
}

#[inline]
fn channel_sum(c: [u8; 3]) -> u32 {
    u32::from(c[0]) + u32::from(c[1]) + u32::from(c[2])
}

fn bucket_key(p: &ContextPattern) -> u64 {
    p.values.iter().fold(0u64, |k, &v| (k << BIN_BITS) | u64::from(channel_sum(v) / BIN_WIDTH))
}

impl PatternStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Histogram stored for exactly `p`, if any.
    pub fn exact(&self, p: &ContextPattern) -> Option<&ColorHistogram> {
        self.exact.get(&p.key()).map(|&i| &self.patterns[i as usize].hist)
    }

    /// Records that `color` followed pattern `p`.
    pub fn update(&mut self, p: &ContextPattern, color: u32) {
        let key = p.key();
        if let Some(&i) = self.exact.get(&key) {
            self.patterns[i as usize].hist.observe(color);
            return;
        }
        let idx = self.patterns.len() as u32;
        let mut hist = ColorHistogram::new();
        hist.observe(color);
        self.patterns.push(StoredPattern { pattern: *p, hist });
        self.exact.insert(key, idx);
        let key = bucket_key(p);
        for (d, set) in self.prefixes.iter_mut().enumerate() {
            set.insert(key >> (BIN_BITS * (5 - d as u32)));
        }
        self.buckets.entry(key).or_default().push((*p, idx));
    }

    /// Sum of the histograms of all stored patterns within `threshold`
    /// of `p`, sorted by color.
    pub fn merged_within(&self, p: &ContextPattern, threshold: u32) -> ColorHistogram {
        let mut merged = ColorHistogram::new();
        if threshold == 0 {
            if let Some(h) = self.exact(p) {
                merged = h.clone();
                merged.sort_by_color();
            }
            return merged;
        }
        let mut acc: FxHashMap<u32, u32> = FxHashMap::default();
        self.for_each_candidate(p, threshold, |q, idx| {
            if q.distance_within(p, threshold).is_some() {
                for &(c, n) in self.patterns[idx as usize].hist.entries() {
                    *acc.entry(c).or_insert(0) += n;
                }
            }
        });
        let mut entries: Vec<(u32, u32)> = acc.into_iter().collect();
        entries.sort_unstable_by_key(|e| e.0);
        merged.total = entries.iter().map(|e| u64::from(e.1)).sum();
        merged.entries = entries;
        merged
    }

    /// Visits every stored pattern whose coarse bucket could hold a match
    /// within `threshold`. A pattern at channel-sum gap `g` from a bin
    /// differs by at least `ceil(g / 3)` in some channel of that position.
    fn for_each_candidate(&self, p: &ContextPattern, threshold: u32, mut f: impl FnMut(&ContextPattern, u32)) {
        let mut choices: [Vec<(u64, u32)>; 6] = Default::default();
        for (i, v) in p.values.iter().enumerate() {
            let s = channel_sum(*v);
            let own = s / BIN_WIDTH;
            choices[i].push((u64::from(own), 0));
            for bin in (0..own).rev() {
                let cost = (s - (bin * BIN_WIDTH + BIN_WIDTH - 1)).div_ceil(3);
                if cost > threshold {
                    break;
                }
                choices[i].push((u64::from(bin), cost));
            }
            for bin in own + 1..=MAX_BIN {
                let cost = (bin * BIN_WIDTH - s).div_ceil(3);
                if cost > threshold {
                    break;
                }
                choices[i].push((u64::from(bin), cost));
            }
        }
        self.walk(&choices, 0, 0, threshold, &mut f);
    }

    fn walk(
        &self,
        choices: &[Vec<(u64, u32)>; 6],
        pos: usize,
        key: u64,
        budget: u32,
        f: &mut impl FnMut(&ContextPattern, u32),
    ) {
        if pos == 6 {
            if let Some(list) = self.buckets.get(&key) {
                list.iter().for_each(|(q, i)| f(q, *i));
            }
            return;
        }
        for &(bin, cost) in &choices[pos] {
            let next = (key << BIN_BITS) | bin;
            if cost <= budget && (pos == 5 || self.prefixes[pos].contains(&next)) {
                self.walk(choices, pos + 1, next, budget - cost, f);
            }
        }
    }

    /// Canonical byte serialization of the store contents.
    pub fn serialize_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.patterns.len() as u32).to_be_bytes());
        for sp in &self.patterns {
            for v in sp.pattern.key().0 {
                out.extend_from_slice(&v.to_be_bytes());
            }
            out.extend_from_slice(&(sp.hist.len() as u32).to_be_bytes());
            for &(c, n) in sp.hist.entries() {
                out.extend_from_slice(&c.to_be_bytes());
                out.extend_from_slice(&n.to_be_bytes());
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn brute_force_merge(&self, p: &ContextPattern, threshold: u32) -> ColorHistogram {
        let mut acc = std::collections::BTreeMap::new();
        for sp in &self.patterns {
            if sp.pattern.distance(p) <= threshold {
                for &(c, n) in sp.hist.entries() {
                    *acc.entry(c).or_insert(0u32) += n;
                }
            }
        }
        ColorHistogram::from_entries(acc)
    }
}

/// Stage 1 lookup: exact match first, then one escalation to the
/// similarity threshold. Empty when neither finds anything.
pub fn merged_histogram(store: &PatternStore, p: &ContextPattern) -> ColorHistogram {
    let exact = store.merged_within(p, 0);
    if !exact.is_empty() {
        return exact;
    }
    store.merged_within(p, SIMILARITY_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::pack_rgb;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const RED: u32 = 0xff0000;
    const BLUE: u32 = 0x0000ff;

    fn pat(v: u8) -> ContextPattern {
        ContextPattern { values: [[v; 3]; 6] }
    }

    #[test]
    fn exact_match_only() {
        let mut s = PatternStore::new();
        let p = pat(100);
        for c in [RED, RED, BLUE, RED] {
            s.update(&p, c);
        }
        s.update(&pat(200), 7);
        let h = merged_histogram(&s, &p);
        assert_eq!(h.entries(), &[(BLUE, 1), (RED, 3)]);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn empty_store_gives_empty_histogram() {
        assert!(merged_histogram(&PatternStore::new(), &pat(0)).is_empty());
    }

    #[test]
    fn near_patterns_are_combined() {
        let mut s = PatternStore::new();
        let mut q1 = pat(100);
        q1.values[0] = [104, 100, 100];
        let mut q2 = pat(100);
        q2.values[3] = [100, 93, 100];
        q2.values[4] = [100, 100, 101];
        s.update(&q1, RED);
        s.update(&q1, RED);
        s.update(&q1, RED);
        s.update(&q2, RED);
        s.update(&q2, BLUE);
        let mut far = pat(100);
        far.values[1] = [113, 100, 100];
        s.update(&far, 0x123456);

        let p = pat(100);
        let h = merged_histogram(&s, &p);
        assert_eq!(h.entries(), &[(BLUE, 1), (RED, 4)]);
        assert_eq!(h, s.brute_force_merge(&p, SIMILARITY_THRESHOLD));
    }

    #[test]
    fn bucket_boundaries_are_crossed() {
        // channel sums 189 and 192 sit in different bins
        let mut s = PatternStore::new();
        let mut q = pat(64);
        q.values[2] = [63, 63, 63];
        s.update(&q, RED);
        let h = s.merged_within(&pat(64), SIMILARITY_THRESHOLD);
        assert_eq!(h.entries(), &[(RED, 1)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn indexed_merge_matches_linear_scan(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: [u8; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let jitter = |rng: &mut ChaCha8Rng| -> ContextPattern {
                let mut values = [base; 6];
                for v in &mut values {
                    for ch in v.iter_mut() {
                        *ch = (i32::from(*ch) + rng.gen_range(-6..=6)).clamp(0, 255) as u8;
                    }
                }
                ContextPattern { values }
            };
            let mut s = PatternStore::new();
            for _ in 0..300 {
                let p = jitter(&mut rng);
                s.update(&p, pack_rgb([rng.gen_range(0..4), 0, 0]));
            }
            for _ in 0..50 {
                let q = jitter(&mut rng);
                for t in [0, 5, SIMILARITY_THRESHOLD] {
                    prop_assert_eq!(s.merged_within(&q, t), s.brute_force_merge(&q, t));
                }
            }
        }
    }
}
