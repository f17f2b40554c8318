//! Pluggable base-layer codecs, registered by their container id.

mod stub;

pub use stub::{quant_step, StubLossyCodec};

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::image::RgbImage;

/// Lossy codec for the base layer.
///
/// Implementations must be deterministic, and `decode` must be a pure
/// function of the payload that returns an image of the encoded size.
pub trait BaseCodec: Send + Sync {
    /// Container id. 0 is the built-in stub; 1..=255 are for adapters.
    fn id(&self) -> u8;
    fn name(&self) -> &'static str;
    fn encode(&self, image: &RgbImage, quality: u8) -> Result<Vec<u8>>;
    fn decode(&self, payload: &[u8]) -> Result<RgbImage>;

    /// Decodes a payload that must hold a `width` x `height` image.
    /// Codecs that can read their dimensions cheaply should reject a
    /// mismatch before decoding.
    fn decode_sized(&self, payload: &[u8], width: u32, height: u32) -> Result<RgbImage> {
        let img = self.decode(payload)?;
        check_size(&img, width, height)?;
        Ok(img)
    }
}

pub(crate) fn check_size(img: &RgbImage, width: u32, height: u32) -> Result<()> {
    if img.width() != width || img.height() != height {
        return Err(Error::DimensionMismatch(format!(
            "base layer decodes to {}x{}, expected {width}x{height}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

#[derive(Clone, Default)]
pub struct CodecRegistry {
    codecs: BTreeMap<u8, Arc<dyn BaseCodec>>,
}

impl CodecRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the built-in codecs.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(StubLossyCodec)).expect("fresh registry");
        r
    }

    pub fn register(&mut self, codec: Arc<dyn BaseCodec>) -> Result<()> {
        let id = codec.id();
        if self.codecs.contains_key(&id) {
            return Err(Error::InvalidInput(format!("codec id {id} already registered")));
        }
        self.codecs.insert(id, codec);
        Ok(())
    }

    pub fn get(&self, id: u8) -> Result<Arc<dyn BaseCodec>> {
        self.codecs.get(&id).cloned().ok_or(Error::UnknownCodec(id))
    }

    pub fn by_name(&self, name: &str) -> Result<Arc<dyn BaseCodec>> {
        self.codecs
            .values()
            .find(|c| c.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy { kind: "base codec", name: name.into() })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.codecs.values().map(|c| c.name()).collect()
    }
}
