use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scfh_core::codec::{BaseCodec, CodecRegistry};
use scfh_core::container::{decode_bytes, encode_image, mask_len, ContainerBitstream, ModeFlag, HEADER_LEN};
use scfh_core::image::{load_ppm, save_ppm, Label, RgbImage};
use scfh_core::segmentation::{CachedOracle, SegmenterRegistry};
use scfh_core::synth::{self, ContentKind};
use scfh_core::Error;

/// Lossless adapter storing PPM bytes, registered under a non-stub id.
struct PpmCodec;

impl BaseCodec for PpmCodec {
    fn id(&self) -> u8 {
        9
    }

    fn name(&self) -> &'static str {
        "ppm"
    }

    fn encode(&self, image: &RgbImage, _: u8) -> scfh_core::Result<Vec<u8>> {
        Ok(save_ppm(image))
    }

    fn decode(&self, payload: &[u8]) -> scfh_core::Result<RgbImage> {
        load_ppm(payload)
    }
}

fn screen() -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut img = synth::generate(ContentKind::Photo, 300, 140, &mut rng);
    img.paste(&synth::generate(ContentKind::Text, 128, 128, &mut rng), 128, 0);
    img
}

#[test]
fn external_codec_through_registry() {
    let mut codecs = CodecRegistry::builtin();
    codecs.register(Arc::new(PpmCodec)).unwrap();
    assert!(codecs.register(Arc::new(PpmCodec)).is_err());
    assert_eq!(codecs.names(), ["stub", "ppm"]);

    let img = screen();
    let codec = codecs.by_name("ppm").unwrap();
    let seg = SegmenterRegistry::builtin().get("all-base").unwrap();
    let r = encode_image(&img, 22, 128, seg.as_ref(), codec.as_ref()).unwrap();
    let bytes = r.bitstream.serialize().unwrap();
    assert_eq!(bytes[16], 0, "ctu size high byte");
    assert_eq!(decode_bytes(&bytes, &codecs).unwrap(), img);
    assert_eq!(decode_bytes(&bytes, &CodecRegistry::builtin()), Err(Error::UnknownCodec(9)));
}

#[test]
fn mixed_container_layout() {
    let img = screen();
    let codecs = CodecRegistry::builtin();
    let stub = codecs.get(0).unwrap();
    let r = encode_image(&img, 27, 128, &CachedOracle::new(), stub.as_ref()).unwrap();
    let b = &r.bitstream;
    assert_eq!(b.header.mode, ModeFlag::Mixed);
    assert_eq!(r.mask.labels()[1], Label::Scf);
    let bytes = b.serialize().unwrap();
    // header, mask, then two length-prefixed payloads and nothing else
    let ctus = r.mask.labels().len();
    assert_eq!(ctus, 6);
    assert_eq!(
        bytes.len(),
        HEADER_LEN + mask_len(ctus) + 4 + b.base_payload.len() + 4 + b.scf_payload.len()
    );
    let at = HEADER_LEN + mask_len(ctus);
    assert_eq!(&bytes[at..at + 4], &(b.base_payload.len() as u32).to_be_bytes());
    assert_eq!(ContainerBitstream::deserialize(&bytes).unwrap(), *b);

    let out = decode_bytes(&bytes, &codecs).unwrap();
    assert_eq!(out, r.reconstruction);
    for (i, rect) in r.mask.grid().rects() {
        if r.mask.labels()[i] == Label::Scf {
            assert_eq!(out.crop(rect), img.crop(rect));
        }
    }
}
