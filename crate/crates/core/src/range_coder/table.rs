use super::SymbolModel;
use crate::error::{Error, Result};

/// Static frequency table: one count per symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: Vec<u32>,
    total: u64,
}

impl FrequencyTable {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        let total = counts.iter().map(|&c| u64::from(c)).sum();
        if total == 0 {
            return Err(Error::InvalidInput("frequency table with zero total".into()));
        }
        Ok(FrequencyTable { counts, total })
    }

    /// `n` symbols with count one each.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        FrequencyTable { counts: vec![1; n], total: n as u64 }
    }

    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl SymbolModel for FrequencyTable {
    #[inline]
    fn total(&self) -> u64 {
        self.total
    }

    fn span(&self, symbol: usize) -> Result<(u64, u64)> {
        let freq = *self.counts.get(symbol).ok_or(Error::ZeroFrequency { symbol })?;
        if freq == 0 {
            return Err(Error::ZeroFrequency { symbol });
        }
        let cum = self.counts[..symbol].iter().map(|&c| u64::from(c)).sum();
        Ok((cum, u64::from(freq)))
    }

    fn locate(&self, target: u64) -> (usize, u64, u64) {
        let mut cum = 0u64;
        for (i, &c) in self.counts.iter().enumerate() {
            let c = u64::from(c);
            if target < cum + c {
                return (i, cum, c);
            }
            cum += c;
        }
        (self.counts.len(), cum, 0)
    }
}
