use super::{SymbolModel, COUNT_CAP};
use crate::error::{Error, Result};

/// Growable adaptive frequency table backed by a Fenwick tree.
///
/// Counts are halved (rounding up) once the total exceeds
/// `max(COUNT_CAP, 2 * len)`. The second term only matters for alphabets
/// with more than 2^15 live symbols, where halving all-ones counts would
/// not reduce the total anyway.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdaptiveModel {
    counts: Vec<u32>,
    tree: Vec<u64>,
    total: u64,
}

impl AdaptiveModel {
    pub fn new(n: usize, initial: u32) -> Self {
        Self::from_counts(vec![initial; n])
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        let mut m = AdaptiveModel { counts, tree: Vec::new(), total: 0 };
        m.rebuild();
        m
    }

    fn rebuild(&mut self) {
        let cap = self.counts.len().next_power_of_two().max(1);
        self.tree.clear();
        self.tree.resize(cap + 1, 0);
        for (i, &c) in self.counts.iter().enumerate() {
            self.tree[i + 1] = u64::from(c);
        }
        for i in 1..=cap {
            let parent = i + (i & i.wrapping_neg());
            if parent <= cap {
                self.tree[parent] += self.tree[i];
            }
        }
        self.total = self.counts.iter().map(|&c| u64::from(c)).sum();
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    #[inline]
    pub fn count(&self, symbol: usize) -> u32 {
        self.counts[symbol]
    }

    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Appends a symbol and returns its index.
    pub fn push(&mut self, count: u32) -> usize {
        self.counts.push(count);
        if self.counts.len() + 1 > self.tree.len() {
            self.rebuild();
        } else {
            self.tree_add(self.counts.len() - 1, i64::from(count));
            self.total += u64::from(count);
        }
        self.counts.len() - 1
    }

    fn tree_add(&mut self, symbol: usize, delta: i64) {
        let mut i = symbol + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    /// Changes one count without triggering a rescale.
    pub fn adjust(&mut self, symbol: usize, delta: i64) {
        let c = i64::from(self.counts[symbol]) + delta;
        assert!(c >= 0 && c <= i64::from(u32::MAX));
        self.counts[symbol] = c as u32;
        self.tree_add(symbol, delta);
        self.total = self.total.wrapping_add_signed(delta);
    }

    /// Adds `by` to `symbol` and rescales if the total grew past the cap.
    pub fn increment(&mut self, symbol: usize, by: u32) {
        self.adjust(symbol, i64::from(by));
        if self.total > COUNT_CAP.max(2 * self.counts.len() as u64) {
            for c in &mut self.counts {
                *c = c.div_ceil(2);
            }
            self.rebuild();
        }
    }

    fn prefix(&self, symbol: usize) -> u64 {
        let mut i = symbol;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i &= i - 1;
        }
        sum
    }
}

impl SymbolModel for AdaptiveModel {
    #[inline]
    fn total(&self) -> u64 {
        self.total
    }

    fn span(&self, symbol: usize) -> Result<(u64, u64)> {
        match self.counts.get(symbol) {
            Some(&c) if c > 0 => Ok((self.prefix(symbol), u64::from(c))),
            _ => Err(Error::ZeroFrequency { symbol }),
        }
    }

    fn locate(&self, target: u64) -> (usize, u64, u64) {
        let cap = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = cap;
        while step > 0 {
            let next = pos + step;
            if next <= cap && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        match self.counts.get(pos) {
            Some(&c) => (pos, target - rem, u64::from(c)),
            None => (pos, target - rem, 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::range_coder::FrequencyTable;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_static_table(counts in prop::collection::vec(0u32..50, 1..300), extra in prop::collection::vec(0u32..50, 0..40)) {
            let mut m = AdaptiveModel::from_counts(counts.clone());
            let mut all = counts;
            for c in extra {
                m.push(c);
                all.push(c);
            }
            prop_assume!(all.iter().any(|&c| c > 0));
            let t = FrequencyTable::new(all.clone()).unwrap();
            prop_assert_eq!(m.total(), t.total());
            for s in 0..all.len() {
                prop_assert_eq!(m.span(s).ok(), t.span(s).ok());
            }
            for target in 0..t.total() {
                prop_assert_eq!(m.locate(target), t.locate(target));
            }
        }
    }

    #[test]
    fn halving_rounds_up() {
        let mut m = AdaptiveModel::from_counts(vec![1, 3, 0]);
        m.increment(1, (COUNT_CAP - 3) as u32);
        // total was COUNT_CAP + 1 > cap
        assert_eq!(m.counts(), &[1, (COUNT_CAP / 2) as u32, 0]);
        assert_eq!(m.total(), 1 + COUNT_CAP / 2);
    }

    #[test]
    fn wide_alphabets_do_not_rescale_every_step() {
        let mut m = AdaptiveModel::new(0, 1);
        for _ in 0..100_000 {
            let s = m.push(1);
            m.increment(s, 0);
        }
        assert!(m.counts().iter().all(|&c| c == 1));
    }
}
