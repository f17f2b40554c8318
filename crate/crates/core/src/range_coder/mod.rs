//! Carry-less 64-bit multi-symbol range coder.
//!
//! The encoder keeps a 64-bit `low` and `range`. A byte is shifted out
//! whenever the top byte of the interval is settled, or when the range
//! drops below 2^32, in which case the range is cut back to the next
//! 2^32-aligned boundary so no carry can ever propagate into bytes that
//! were already written. The flush writes all eight bytes of `low`, so
//! the decoder consumes exactly as many bytes as the encoder produced and
//! any read past the end is a truncation.

mod adaptive;
mod table;

pub use adaptive::AdaptiveModel;
pub use table::FrequencyTable;

use crate::error::{Error, Result};

/// Largest frequency total either side accepts.
pub const MAX_TOTAL: u64 = 1 << 26;
/// Adaptive tables are halved once their total passes this value.
pub const COUNT_CAP: u64 = 1 << 16;

const TOP: u64 = 1 << 56;
const BOT: u64 = 1 << 32;

/// Cumulative-frequency view of a probability model.
pub trait SymbolModel {
    fn total(&self) -> u64;
    /// `(cumulative, frequency)` of `symbol`.
    fn span(&self, symbol: usize) -> Result<(u64, u64)>;
    /// Symbol whose span contains `target`, with that span.
    fn locate(&self, target: u64) -> (usize, u64, u64);
}

/// Self-information of `symbol` under `table`, in bits.
pub fn code_length_bits<M: SymbolModel + ?Sized>(table: &M, symbol: usize) -> Result<f64> {
    let (_, freq) = table.span(symbol)?;
    Ok(-(freq as f64 / table.total() as f64).log2())
}

fn check_total(total: u64) -> Result<()> {
    if total == 0 || total > MAX_TOTAL {
        return Err(Error::BadTotal(total));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RangeEncoder {
    low: u64,
    range: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder { low: 0, range: u64::MAX, out: Vec::new() }
    }

    /// Narrows the interval to `[cum, cum + freq)` out of `total`.
    pub fn encode_range(&mut self, cum: u64, freq: u64, total: u64) -> Result<()> {
        check_total(total)?;
        if freq == 0 {
            return Err(Error::ZeroFrequency { symbol: cum as usize });
        }
        if cum + freq > total {
            return Err(Error::Corrupt(format!("span {cum}+{freq} exceeds total {total}")));
        }
        let r = self.range / total;
        self.low += r * cum;
        self.range = r * freq;
        self.normalize();
        Ok(())
    }

    pub fn encode<M: SymbolModel + ?Sized>(&mut self, model: &M, symbol: usize) -> Result<()> {
        let (cum, freq) = model.span(symbol)?;
        self.encode_range(cum, freq, model.total())
    }

    fn normalize(&mut self) {
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.out.push((self.low >> 56) as u8);
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    /// Bytes emitted so far, excluding the pending flush.
    pub fn bytes_written(&self) -> usize {
        self.out.len()
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.out.extend_from_slice(&self.low.to_be_bytes());
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    low: u64,
    range: u64,
    code: u64,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut dec = RangeDecoder { low: 0, range: u64::MAX, code: 0, input, pos: 0 };
        for _ in 0..8 {
            dec.code = (dec.code << 8) | u64::from(dec.next_byte()?);
        }
        Ok(dec)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.input.get(self.pos).ok_or(Error::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    /// Scaled position of the code value inside the current interval.
    pub fn decode_target(&self, total: u64) -> Result<u64> {
        check_total(total)?;
        let r = self.range / total;
        let offset = self.code.wrapping_sub(self.low);
        if offset >= self.range {
            return Err(Error::Corrupt("code value outside interval".into()));
        }
        let v = offset / r;
        if v >= total {
            return Err(Error::Corrupt("code value beyond table total".into()));
        }
        Ok(v)
    }

    /// Mirrors [`RangeEncoder::encode_range`].
    pub fn consume(&mut self, cum: u64, freq: u64, total: u64) -> Result<()> {
        check_total(total)?;
        if freq == 0 || cum + freq > total {
            return Err(Error::Corrupt("invalid span".into()));
        }
        let r = self.range / total;
        self.low += r * cum;
        self.range = r * freq;
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.code = (self.code << 8) | u64::from(self.next_byte()?);
            self.low <<= 8;
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn decode<M: SymbolModel + ?Sized>(&mut self, model: &M) -> Result<usize> {
        let total = model.total();
        let target = self.decode_target(total)?;
        let (symbol, cum, freq) = model.locate(target);
        if freq == 0 {
            return Err(Error::Corrupt("target maps to empty symbol".into()));
        }
        self.consume(cum, freq, total)?;
        Ok(symbol)
    }

    /// Fails unless every input byte was consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.input.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after range-coded stream",
                self.input.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn code_length_examples() {
        let t = FrequencyTable::new(vec![1, 1]).unwrap();
        assert_eq!(code_length_bits(&t, 0).unwrap(), 1.0);
        let t = FrequencyTable::new(vec![3, 1]).unwrap();
        assert!((code_length_bits(&t, 0).unwrap() - -(0.75f64).log2()).abs() < 1e-15);
        assert!((code_length_bits(&t, 0).unwrap() - 0.415).abs() < 1e-3);
        let t = FrequencyTable::new(vec![1]).unwrap();
        assert_eq!(code_length_bits(&t, 0).unwrap(), 0.0);
        let t = FrequencyTable::new(vec![0, 4]).unwrap();
        assert!(matches!(code_length_bits(&t, 0), Err(Error::ZeroFrequency { symbol: 0 })));
    }

    #[test]
    fn certain_symbols_cost_only_flush() {
        let t = FrequencyTable::new(vec![1]).unwrap();
        let mut enc = RangeEncoder::new();
        for _ in 0..1000 {
            enc.encode(&t, 0).unwrap();
        }
        let bytes = enc.finish();
        assert!(bytes.len() <= 16, "{} bytes", bytes.len());
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for _ in 0..1000 {
            assert_eq!(dec.decode(&t).unwrap(), 0);
        }
        dec.finish().unwrap();
    }

    #[test]
    fn zero_frequency_symbol_is_rejected() {
        let t = FrequencyTable::new(vec![2, 0, 1]).unwrap();
        let mut enc = RangeEncoder::new();
        assert!(matches!(enc.encode(&t, 1), Err(Error::ZeroFrequency { symbol: 1 })));
    }

    #[test]
    fn empty_payload_is_truncated() {
        assert_eq!(RangeDecoder::new(&[]).unwrap_err(), Error::Truncated);
        // a stream that was cut after the first byte of its flush
        let t = FrequencyTable::new(vec![1, 1]).unwrap();
        let mut enc = RangeEncoder::new();
        for i in 0..200 {
            enc.encode(&t, i % 2).unwrap();
        }
        let bytes = enc.finish();
        let cut = &bytes[..bytes.len() - 4];
        let res = (|| -> Result<()> {
            let mut dec = RangeDecoder::new(cut)?;
            for _ in 0..200 {
                dec.decode(&t)?;
            }
            Ok(())
        })();
        assert_eq!(res, Err(Error::Truncated));
    }

    #[test]
    fn iid_skewed_source_rate() {
        // H(3/4, 1/4)
        let entropy = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((entropy - 0.8113).abs() < 1e-4);
        let t = FrequencyTable::new(vec![3, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let symbols: Vec<usize> = (0..n).map(|_| usize::from(rng.gen_range(0..4) == 0)).collect();
        let mut enc = RangeEncoder::new();
        for &s in &symbols {
            enc.encode(&t, s).unwrap();
        }
        let bytes = enc.finish();
        let bits_per_symbol = bytes.len() as f64 * 8.0 / n as f64;
        assert!((bits_per_symbol - entropy).abs() / entropy < 0.02, "{bits_per_symbol}");
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for &s in &symbols {
            assert_eq!(dec.decode(&t).unwrap(), s);
        }
    }

    #[test]
    fn large_totals_round_trip() {
        let mut counts = vec![1u32; 1 << 20];
        counts[5] = (MAX_TOTAL - (1 << 20) + 1) as u32;
        let t = FrequencyTable::new(counts).unwrap();
        assert_eq!(t.total(), MAX_TOTAL);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let syms: Vec<usize> = (0..5000)
            .map(|_| if rng.gen_bool(0.5) { 5 } else { rng.gen_range(0..1 << 20) })
            .collect();
        let mut enc = RangeEncoder::new();
        for &s in &syms {
            enc.encode(&t, s).unwrap();
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for &s in &syms {
            assert_eq!(dec.decode(&t).unwrap(), s);
        }
        dec.finish().unwrap();
        let over = FrequencyTable::new(vec![1; (MAX_TOTAL + 1) as usize]).unwrap();
        assert!(matches!(RangeEncoder::new().encode(&over, 0), Err(Error::BadTotal(_))));
    }

    fn random_tables(seed: u64, len: usize) -> (Vec<FrequencyTable>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tables = Vec::new();
        let mut syms = Vec::new();
        for _ in 0..len {
            let n = rng.gen_range(2..=1024);
            let skew = rng.gen_range(0..3);
            let counts: Vec<u32> = (0..n)
                .map(|_| match skew {
                    0 => rng.gen_range(1..4),
                    1 => rng.gen_range(0..3),
                    _ => rng.gen_range(0..60_000) / rng.gen_range(1..1000),
                })
                .collect();
            let mut counts = counts;
            let s = rng.gen_range(0..n);
            counts[s] = counts[s].max(1);
            tables.push(FrequencyTable::new(counts).unwrap());
            syms.push(s);
        }
        (tables, syms)
    }

    #[test]
    fn rate_is_near_information_content() {
        let (tables, syms) = random_tables(11, 10_000);
        let info: f64 =
            tables.iter().zip(&syms).map(|(t, &s)| code_length_bits(t, s).unwrap()).sum();
        let mut enc = RangeEncoder::new();
        for (t, &s) in tables.iter().zip(&syms) {
            enc.encode(t, s).unwrap();
        }
        let bytes = enc.finish();
        assert!(bytes.len() as f64 <= info / 8.0 + 64.0, "{} vs {}", bytes.len(), info / 8.0);
    }

    #[test]
    fn output_is_deterministic() {
        let run = || {
            let (tables, syms) = random_tables(5, 2000);
            let mut enc = RangeEncoder::new();
            for (t, &s) in tables.iter().zip(&syms) {
                enc.encode(t, s).unwrap();
            }
            enc.finish()
        };
        assert_eq!(run(), run());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_random_tables(seed in any::<u64>(), len in 1usize..200) {
            let (tables, syms) = random_tables(seed, len);
            let mut enc = RangeEncoder::new();
            for (t, &s) in tables.iter().zip(&syms) {
                enc.encode(t, s).unwrap();
            }
            let bytes = enc.finish();
            let mut dec = RangeDecoder::new(&bytes).unwrap();
            for (t, &s) in tables.iter().zip(&syms) {
                prop_assert_eq!(dec.decode(t).unwrap(), s);
            }
            prop_assert!(dec.finish().is_ok());
        }
    }
}
