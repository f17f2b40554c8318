//! Binary kNN model file.
//!
//! ```text
//! "SCFK" | version u8 = 1 | body length u32
//! body: quality u8 | k u32 | n u32 | mean f64 x4 | std f64 x4
//!       | n x (feature f64 x4 | label u8: 1 = SCF, 0 = BASE)
//! ```
//! Integers and IEEE-754 doubles are big-endian.

use super::features::{BlockFeatures, FEATURE_COUNT};
use super::knn::{FeatureScale, KnnModel, TrainingSample};
use crate::error::{Error, Result};
use crate::image::Label;

pub const MODEL_MAGIC: &[u8; 4] = b"SCFK";
pub const MODEL_VERSION: u8 = 1;

const SAMPLE_LEN: usize = FEATURE_COUNT * 8 + 1;
const FIXED_LEN: usize = 1 + 4 + 4 + 2 * FEATURE_COUNT * 8;

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_be_bytes());
    }
}

pub fn save_model(model: &KnnModel) -> Vec<u8> {
    let n = model.samples().len();
    let mut body = Vec::with_capacity(FIXED_LEN + n * SAMPLE_LEN);
    body.push(model.quality());
    body.extend_from_slice(&(model.k() as u32).to_be_bytes());
    body.extend_from_slice(&(n as u32).to_be_bytes());
    put_f64s(&mut body, &model.scale().mean);
    put_f64s(&mut body, &model.scale().std);
    for s in model.samples() {
        put_f64s(&mut body, &s.features.to_array());
        body.push(u8::from(s.label == Label::Scf));
    }
    let mut out = Vec::with_capacity(9 + body.len());
    out.extend_from_slice(MODEL_MAGIC);
    out.push(MODEL_VERSION);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Truncated);
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self) -> Result<[f64; FEATURE_COUNT]> {
        let mut v = [0.0; FEATURE_COUNT];
        for x in &mut v {
            *x = f64::from_be_bytes(self.take(8)?.try_into().unwrap());
        }
        Ok(v)
    }
}

pub fn load_model(bytes: &[u8]) -> Result<KnnModel> {
    let mut r = Reader { bytes };
    if r.take(4).map_err(|_| Error::Model("bad magic".into()))? != MODEL_MAGIC {
        return Err(Error::Model("bad magic".into()));
    }
    let version = r.u8()?;
    if version != MODEL_VERSION {
        return Err(Error::Model(format!("unsupported model version {version}")));
    }
    let len = r.u32()? as usize;
    let body = r.take(len)?;
    if !r.bytes.is_empty() {
        return Err(Error::Model("trailing bytes after model body".into()));
    }
    let mut r = Reader { bytes: body };
    let quality = r.u8()?;
    let k = r.u32()? as usize;
    let n = r.u32()? as usize;
    if len != FIXED_LEN + n.saturating_mul(SAMPLE_LEN) {
        return Err(Error::Model("body length disagrees with sample count".into()));
    }
    let scale = FeatureScale { mean: r.f64s()?, std: r.f64s()? };
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let features = BlockFeatures::from_array(r.f64s()?);
        let label = match r.u8()? {
            0 => Label::Base,
            1 => Label::Scf,
            v => return Err(Error::Model(format!("bad label byte {v}"))),
        };
        samples.push(TrainingSample { features, label, quality });
    }
    KnnModel::from_parts(k, quality, scale, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::knn::{knn_classify, knn_train};

    fn model() -> KnnModel {
        let samples: Vec<_> = (0..20)
            .map(|i| TrainingSample {
                features: BlockFeatures::from_array([i as f64 * 0.01, 0.5, (i % 5) as f64, 1.25]),
                label: if i % 3 == 0 { Label::Scf } else { Label::Base },
                quality: 27,
            })
            .collect();
        knn_train(&samples, 3).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = model();
        let bytes = save_model(&m);
        assert_eq!(&bytes[..4], b"SCFK");
        assert_eq!(bytes.len(), 9 + FIXED_LEN + 20 * SAMPLE_LEN);
        let back = load_model(&bytes).unwrap();
        assert_eq!(back, m);
        let q = BlockFeatures::from_array([0.05, 0.5, 2.0, 1.25]);
        assert_eq!(knn_classify(&back, &q).unwrap(), knn_classify(&m, &q).unwrap());
    }

    #[test]
    fn rejects_malformed() {
        let bytes = save_model(&model());
        assert!(load_model(&[]).is_err());
        assert!(load_model(b"SCFX\x01").is_err());
        for cut in [5, 9, 20, bytes.len() - 1] {
            assert!(load_model(&bytes[..cut]).is_err(), "cut {cut}");
        }
        let mut v = bytes.clone();
        v[4] = 2;
        assert!(load_model(&v).is_err());
        let mut v = bytes.clone();
        v.push(0);
        assert!(load_model(&v).is_err());
        // zero standard deviation
        let mut v = bytes.clone();
        let std0 = 9 + 9 + FEATURE_COUNT * 8;
        v[std0..std0 + 8].copy_from_slice(&0f64.to_be_bytes());
        assert!(load_model(&v).is_err());
    }
}
