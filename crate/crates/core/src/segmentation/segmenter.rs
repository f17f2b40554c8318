use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::features::extract_features;
use super::knn::{knn_classify, KnnModel};
use crate::codec::BaseCodec;
use crate::error::{Error, Result};
use crate::image::{CtuGrid, Label, RgbImage, SegmentationMask};
use crate::scf::estimate_scf_rate;

/// Bits spent by each coder on one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRates {
    pub scf_bits: u64,
    pub base_bits: u64,
}

impl BlockRates {
    /// SCF only when strictly cheaper.
    pub fn label(&self) -> Label {
        if self.scf_bits < self.base_bits {
            Label::Scf
        } else {
            Label::Base
        }
    }
}

pub fn oracle_rates(block: &RgbImage, codec: &dyn BaseCodec, quality: u8) -> Result<BlockRates> {
    let base_bits = codec.encode(block, quality)?.len() as u64 * 8;
    Ok(BlockRates { scf_bits: estimate_scf_rate(block)?, base_bits })
}

pub fn oracle_label(block: &RgbImage, codec: &dyn BaseCodec, quality: u8) -> Result<Label> {
    Ok(oracle_rates(block, codec, quality)?.label())
}

/// Strategy assigning a layer to one CTU.
pub trait Segmenter: Send + Sync {
    fn name(&self) -> &str;
    fn classify(&self, block: &RgbImage, codec: &dyn BaseCodec, quality: u8) -> Result<Label>;
}

#[derive(Debug, Clone)]
pub struct KnnSegmenter {
    model: KnnModel,
}

impl KnnSegmenter {
    pub fn new(model: KnnModel) -> Self {
        KnnSegmenter { model }
    }

    pub fn model(&self) -> &KnnModel {
        &self.model
    }
}

impl Segmenter for KnnSegmenter {
    fn name(&self) -> &str {
        "knn"
    }

    fn classify(&self, block: &RgbImage, _: &dyn BaseCodec, quality: u8) -> Result<Label> {
        if quality != self.model.quality() {
            return Err(Error::Model(format!(
                "model trained for quality {}, asked for {quality}",
                self.model.quality()
            )));
        }
        knn_classify(&self.model, &extract_features(block))
    }
}

/// One kNN model per quality level.
#[derive(Debug, Clone, Default)]
pub struct KnnModelSet {
    models: BTreeMap<u8, KnnModel>,
}

impl KnnModelSet {
    pub fn new(models: impl IntoIterator<Item = KnnModel>) -> Result<Self> {
        let mut set = BTreeMap::new();
        for m in models {
            let q = m.quality();
            if set.insert(q, m).is_some() {
                return Err(Error::Model(format!("two models for quality {q}")));
            }
        }
        Ok(KnnModelSet { models: set })
    }

    pub fn qualities(&self) -> Vec<u8> {
        self.models.keys().copied().collect()
    }

    pub fn get(&self, quality: u8) -> Option<&KnnModel> {
        self.models.get(&quality)
    }
}

impl Segmenter for KnnModelSet {
    fn name(&self) -> &str {
        "knn"
    }

    fn classify(&self, block: &RgbImage, _: &dyn BaseCodec, quality: u8) -> Result<Label> {
        let model = self
            .models
            .get(&quality)
            .ok_or_else(|| Error::Model(format!("no model for quality {quality}")))?;
        knn_classify(model, &extract_features(block))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleSegmenter;

impl Segmenter for OracleSegmenter {
    fn name(&self) -> &str {
        "oracle"
    }

    fn classify(&self, block: &RgbImage, codec: &dyn BaseCodec, quality: u8) -> Result<Label> {
        oracle_label(block, codec, quality)
    }
}

/// Oracle that remembers the SCF rate of every block it has seen, so
/// sweeps over several quality levels code each block losslessly once.
#[derive(Debug, Default)]
pub struct CachedOracle {
    scf_bits: Mutex<FxHashMap<RgbImage, u64>>,
}

impl CachedOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rates(&self, block: &RgbImage, codec: &dyn BaseCodec, quality: u8) -> Result<BlockRates> {
        let cached = self.scf_bits.lock().map_err(|_| poisoned())?.get(block).copied();
        let scf_bits = match cached {
            Some(b) => b,
            None => {
                let b = estimate_scf_rate(block)?;
                self.scf_bits.lock().map_err(|_| poisoned())?.insert(block.clone(), b);
                b
            }
        };
        let base_bits = codec.encode(block, quality)?.len() as u64 * 8;
        Ok(BlockRates { scf_bits, base_bits })
    }
}

fn poisoned() -> Error {
    Error::InvalidInput("oracle cache poisoned".into())
}

impl Segmenter for CachedOracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn classify(&self, block: &RgbImage, codec: &dyn BaseCodec, quality: u8) -> Result<Label> {
        Ok(self.rates(block, codec, quality)?.label())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedSegmenter(pub Label);

impl Segmenter for FixedSegmenter {
    fn name(&self) -> &str {
        match self.0 {
            Label::Scf => "all-scf",
            Label::Base => "all-base",
        }
    }

    fn classify(&self, _: &RgbImage, _: &dyn BaseCodec, _: u8) -> Result<Label> {
        Ok(self.0)
    }
}

#[derive(Clone, Default)]
pub struct SegmenterRegistry {
    entries: BTreeMap<String, Arc<dyn Segmenter>>,
}

impl SegmenterRegistry {
    /// The model-free strategies: `oracle`, `all-scf`, `all-base`.
    pub fn builtin() -> Self {
        let mut r = Self::default();
        for s in [
            Arc::new(CachedOracle::new()) as Arc<dyn Segmenter>,
            Arc::new(FixedSegmenter(Label::Scf)),
            Arc::new(FixedSegmenter(Label::Base)),
        ] {
            r.register(s).expect("fresh registry");
        }
        r
    }

    pub fn register(&mut self, s: Arc<dyn Segmenter>) -> Result<()> {
        let name = s.name().to_string();
        if self.entries.contains_key(&name) {
            return Err(Error::InvalidInput(format!("segmenter {name} already registered")));
        }
        self.entries.insert(name, s);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Segmenter>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy { kind: "segmenter", name: name.into() })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

/// Labels every CTU of `image`; CTUs are classified in parallel.
pub fn segment_image(
    image: &RgbImage,
    ctu_size: u32,
    segmenter: &dyn Segmenter,
    codec: &dyn BaseCodec,
    quality: u8,
) -> Result<SegmentationMask> {
    let grid = CtuGrid::for_image(image, ctu_size)?;
    let rects: Vec<_> = grid.rects().collect();
    let labels = rects
        .par_iter()
        .map(|(_, r)| segmenter.classify(&image.crop(*r), codec, quality))
        .collect::<Result<Vec<_>>>()?;
    SegmentationMask::new(grid, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::StubLossyCodec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn text_block() -> RgbImage {
        RgbImage::from_fn(128, 128, |x, y| {
            let on = (x % 7 < 2 && y % 11 < 8) || (y % 11 == 3 && x % 7 < 5);
            if on { [0, 0, 0] } else { [255, 255, 255] }
        })
        .unwrap()
    }

    fn photo_block(seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RgbImage::from_fn(128, 128, |x, y| {
            let v = 100.0 + 60.0 * ((x as f64) * 0.05).sin() * ((y as f64) * 0.07).cos();
            let mut ch = |off: f64| (v + off + rng.gen_range(-12.0..12.0)).clamp(0.0, 255.0) as u8;
            [ch(0.0), ch(20.0), ch(-30.0)]
        })
        .unwrap()
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_label(&text_block(), &StubLossyCodec, 22).unwrap(), Label::Scf);
        assert_eq!(oracle_label(&photo_block(1), &StubLossyCodec, 22).unwrap(), Label::Base);
    }

    #[test]
    fn ties_go_to_base() {
        assert_eq!(BlockRates { scf_bits: 100, base_bits: 100 }.label(), Label::Base);
        assert_eq!(BlockRates { scf_bits: 99, base_bits: 100 }.label(), Label::Scf);
    }

    #[test]
    fn registry_and_fixed_strategies() {
        let r = SegmenterRegistry::builtin();
        assert_eq!(r.names(), vec!["all-base", "all-scf", "oracle"]);
        assert!(r.get("knn").is_err());
        let img = RgbImage::new(300, 130, [1, 2, 3]).unwrap();
        let mask = segment_image(&img, 128, r.get("all-scf").unwrap().as_ref(), &StubLossyCodec, 22)
            .unwrap();
        assert_eq!(mask.labels().len(), 6);
        assert_eq!(mask.count(Label::Scf), 6);
    }

    #[test]
    fn parallel_segmentation_matches_serial() {
        let mut img = RgbImage::new(256, 256, [0; 3]).unwrap();
        img.paste(&text_block(), 0, 0);
        img.paste(&photo_block(2), 128, 0);
        img.paste(&photo_block(3), 0, 128);
        img.paste(&text_block(), 128, 128);
        let mask = segment_image(&img, 128, &OracleSegmenter, &StubLossyCodec, 22).unwrap();
        let serial: Vec<Label> = CtuGrid::for_image(&img, 128)
            .unwrap()
            .rects()
            .map(|(_, r)| oracle_label(&img.crop(r), &StubLossyCodec, 22).unwrap())
            .collect();
        assert_eq!(mask.labels(), &serial[..]);
        assert_eq!(serial, vec![Label::Scf, Label::Base, Label::Base, Label::Scf]);
    }

    #[test]
    fn model_set_dispatches_by_quality() {
        use crate::segmentation::{extract_features, knn_train, TrainingSample};
        let sample = |img: &RgbImage, label, quality| TrainingSample {
            features: extract_features(img),
            label,
            quality,
        };
        let train = |q: u8, text_label: Label, photo_label: Label| {
            let mut v = Vec::new();
            for s in 0..3 {
                v.push(sample(&text_block(), text_label, q));
                v.push(sample(&photo_block(10 + s), photo_label, q));
            }
            knn_train(&v, 1).unwrap()
        };
        let set = KnnModelSet::new([train(22, Label::Scf, Label::Base), train(37, Label::Base, Label::Scf)]).unwrap();
        assert_eq!(set.qualities(), vec![22, 37]);
        assert_eq!(set.classify(&text_block(), &StubLossyCodec, 22).unwrap(), Label::Scf);
        assert_eq!(set.classify(&text_block(), &StubLossyCodec, 37).unwrap(), Label::Base);
        assert!(set.classify(&text_block(), &StubLossyCodec, 27).is_err());
        assert!(KnnModelSet::new([train(22, Label::Scf, Label::Base), train(22, Label::Scf, Label::Base)]).is_err());
    }

    #[test]
    fn cached_oracle_agrees_with_oracle() {
        let cached = CachedOracle::new();
        for q in [22, 37] {
            for block in [text_block(), photo_block(4)] {
                let want = oracle_rates(&block, &StubLossyCodec, q).unwrap();
                assert_eq!(cached.rates(&block, &StubLossyCodec, q).unwrap(), want);
                assert_eq!(cached.classify(&block, &StubLossyCodec, q).unwrap(), want.label());
            }
        }
        assert_eq!(cached.scf_bits.lock().unwrap().len(), 2);
    }
}
