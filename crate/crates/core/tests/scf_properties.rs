use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use proptest::prelude::*;
use rustc_hash::FxHashSet;

use scfh_core::image::{pack_rgb, CtuGrid, Label, RgbImage, SegmentationMask};
use scfh_core::range_coder::{code_length_bits, RangeDecoder, SymbolModel};
use scfh_core::scf::{
    gather_context, merged_histogram, scf_decode_layer, scf_encode_layer, select_palette_prefix,
    stage1_distribution, ColorHistogram, GlobalPalette, ScfDecoder, ScfEncoder, ScfModel, Stage,
};

fn digest(model: &ScfModel) -> u64 {
    let mut h = DefaultHasher::new();
    model.serialize_state().hash(&mut h);
    h.finish()
}

/// Images over a small palette so that all three stages get exercised.
fn image_strategy(max: u32) -> impl Strategy<Value = RgbImage> {
    (1..=max, 1..=max, 1usize..12, any::<u64>()).prop_map(|(w, h, colors, seed)| {
        let palette: Vec<[u8; 3]> = (0..colors as u64)
            .map(|i| {
                let v = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(i as u32 * 7) ^ i;
                [v as u8, (v >> 8) as u8, (v >> 16) as u8]
            })
            .collect();
        let mut state = seed | 1;
        RgbImage::from_fn(w, h, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if state % 5 == 0 {
                [(state >> 8) as u8, (state >> 16) as u8, (state >> 24) as u8]
            } else {
                palette[(state >> 32) as usize % palette.len()]
            }
        })
        .unwrap()
    })
}

fn mask_for(img: &RgbImage, ctu: u32, bits: u64) -> SegmentationMask {
    let grid = CtuGrid::for_image(img, ctu).unwrap();
    let labels = (0..grid.len()).map(|i| if bits >> (i % 64) & 1 == 1 { Label::Scf } else { Label::Base }).collect();
    SegmentationMask::new(grid, labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoder_and_decoder_states_stay_in_lockstep(
        img in image_strategy(24),
        base_seed in any::<u64>(),
        bits in any::<u64>(),
        prefix in proptest::collection::vec((0u32..1 << 24, 1u32..50), 0..6),
    ) {
        let base = RgbImage::from_fn(img.width(), img.height(), |x, y| {
            let v = base_seed.rotate_left((x * 3 + y * 5) % 64);
            [v as u8, (v >> 8) as u8, (v >> 16) as u8]
        }).unwrap();
        let mask = mask_for(&img, 8, bits);
        let palette = GlobalPalette::from_entries(prefix);

        let mut enc = ScfEncoder::new(base.clone(), palette.clone());
        let mut trace = Vec::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                if mask.label_at(x, y) != Label::Scf {
                    continue;
                }
                let color = pack_rgb(img.get(x, y));
                let hist = merged_histogram(&enc.model().patterns, &gather_context(enc.canvas(), x, y));
                let palette_before = enc.model().palette.clone();
                let stage = enc.encode_pixel(x, y, img.get(x, y)).unwrap();
                // a color present in the merged histogram is always coded there
                prop_assert_eq!(hist.contains(color), stage == Stage::Pattern);
                // palette counts move only for Stage 2/3 pixels
                prop_assert_eq!(enc.model().palette == palette_before, stage == Stage::Pattern);
                trace.push((x, y, stage, digest(enc.model())));
            }
        }
        let (payload, canvas) = enc.finish();

        let mut dec = ScfDecoder::new(RangeDecoder::new(&payload).unwrap(), base, palette);
        for &(x, y, stage, d) in &trace {
            let (px, s) = dec.decode_pixel(x, y).unwrap();
            prop_assert_eq!(px, img.get(x, y));
            prop_assert_eq!(s, stage);
            prop_assert_eq!(digest(dec.model()), d);
        }
        prop_assert_eq!(&dec.finish().unwrap(), &canvas);
    }

    #[test]
    fn layer_round_trip_keeps_base_pixels(
        img in image_strategy(40),
        bits in any::<u64>(),
        ctu in prop_oneof![Just(4u32), Just(16), Just(128)],
        fill in any::<[u8; 3]>(),
    ) {
        let base = RgbImage::new(img.width(), img.height(), fill).unwrap();
        let mask = mask_for(&img, ctu, bits);
        let payload = scf_encode_layer(&img, &mask, &base).unwrap();
        let out = scf_decode_layer(&payload, &mask, &base).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let want = if mask.label_at(x, y) == Label::Scf { img.get(x, y) } else { fill };
                prop_assert_eq!(out.get(x, y), want);
            }
        }
    }

    #[test]
    fn stage1_probabilities_are_exact_ratios(
        entries in proptest::collection::vec((0u32..1 << 24, 1u32..100_000), 1..60),
    ) {
        let hist = ColorHistogram::from_entries(entries);
        let t = stage1_distribution(&hist).unwrap();
        let counts = t.table.counts();
        let esc = counts[t.escape_symbol()];
        prop_assert_eq!(esc as usize, hist.len());
        let non_escape = t.table.total() - u64::from(esc);
        for (i, &c) in t.colors.iter().enumerate() {
            prop_assert_eq!(
                u128::from(counts[i]) * u128::from(hist.total()),
                u128::from(hist.get(c)) * u128::from(non_escape)
            );
            let want = -(f64::from(counts[i]) / t.table.total() as f64).log2();
            prop_assert!((code_length_bits(&t.table, i).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn palette_prefix_matches_exhaustive_scan(
        n in 0usize..200,
        picks in proptest::collection::vec(any::<bool>(), 200),
        extra in proptest::collection::vec(1000u32..2000, 0..20),
    ) {
        let base: Vec<(u32, u64)> = (0..n as u32).map(|c| (c, u64::from(500 - c))).collect();
        let scf: FxHashSet<u32> =
            (0..n as u32).filter(|&c| picks[c as usize]).chain(extra).collect();
        let mut best: Option<(u8, u64, u64)> = None;
        for b in 0..=6u8 {
            let size = (n >> b) as u64;
            if size == 0 {
                continue;
            }
            let hits = (0..size as u32).filter(|c| scf.contains(c)).count() as u64;
            if best.map_or(true, |(_, bh, bs)| hits * bs > bh * size) {
                best = Some((b, hits, size));
            }
        }
        let want = match best {
            Some((b, h, s)) if 10 * h >= 9 * s => b,
            _ => 7,
        };
        let got = select_palette_prefix(&scf, &base);
        prop_assert_eq!(got.b, want);
        prop_assert_eq!(got.prefix.len(), if want == 7 { 0 } else { n >> want });
    }
}

#[test]
fn empty_histogram_skips_stage_one() {
    assert!(stage1_distribution(&ColorHistogram::new()).is_none());
}
