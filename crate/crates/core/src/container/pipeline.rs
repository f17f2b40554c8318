use super::{ContainerBitstream, ContainerHeader, ModeFlag};
use crate::codec::{check_size, BaseCodec, CodecRegistry};
use crate::error::{Error, Result};
use crate::image::{blacken, check_mask, Label, RgbImage, SegmentationMask};
use crate::scf::{neutral_canvas, scf_decode_layer, scf_encode_layer};
use crate::segmentation::{segment_image, Segmenter};

#[derive(Debug, Clone)]
pub struct EncodeReport {
    pub bitstream: ContainerBitstream,
    pub mask: SegmentationMask,
    /// Decoder-side reconstruction; equals the source inside SCF CTUs.
    pub reconstruction: RgbImage,
}

impl EncodeReport {
    pub fn scf_pixel_fraction(&self) -> f64 {
        self.mask.pixel_count(Label::Scf) as f64 / self.reconstruction.area() as f64
    }
}

fn decode_base(codec: &dyn BaseCodec, payload: &[u8], width: u32, height: u32) -> Result<RgbImage> {
    let recon = codec.decode_sized(payload, width, height)?;
    check_size(&recon, width, height)?;
    Ok(recon)
}

/// Encodes `image` with a fixed segmentation.
pub fn encode_with_mask(
    image: &RgbImage,
    mask: &SegmentationMask,
    quality: u8,
    codec: &dyn BaseCodec,
) -> Result<EncodeReport> {
    check_mask(image, mask)?;
    let ctu_size = u16::try_from(mask.grid().ctu_size)
        .map_err(|_| Error::InvalidInput(format!("CTU size {} exceeds 65535", mask.grid().ctu_size)))?;
    let mode = ModeFlag::for_mask(mask);

    let (base_payload, base_recon) = if mode == ModeFlag::AllScf {
        (Vec::new(), neutral_canvas(image.width(), image.height())?)
    } else {
        let (base_layer, _) = blacken(image, mask)?;
        let payload = codec.encode(&base_layer.image, quality)?;
        let recon = decode_base(codec, &payload, image.width(), image.height())?;
        (payload, recon)
    };

    let (scf_payload, reconstruction) = if mode == ModeFlag::AllBase {
        (Vec::new(), base_recon)
    } else {
        let payload = scf_encode_layer(image, mask, &base_recon)?;
        let mut recon = base_recon;
        for (i, rect) in mask.grid().rects() {
            if mask.labels()[i] == Label::Scf {
                recon.paste(&image.crop(rect), rect.x, rect.y);
            }
        }
        (payload, recon)
    };

    let bitstream = ContainerBitstream {
        header: ContainerHeader {
            mode,
            quality,
            width: image.width(),
            height: image.height(),
            base_codec_id: codec.id(),
            ctu_size,
        },
        labels: if mode == ModeFlag::Mixed { mask.labels().to_vec() } else { Vec::new() },
        base_payload,
        scf_payload,
    };
    Ok(EncodeReport { bitstream, mask: mask.clone(), reconstruction })
}

/// Segments `image` with `segmenter`, then encodes both layers.
pub fn encode_image(
    image: &RgbImage,
    quality: u8,
    ctu_size: u32,
    segmenter: &dyn Segmenter,
    codec: &dyn BaseCodec,
) -> Result<EncodeReport> {
    let mask = segment_image(image, ctu_size, segmenter, codec, quality)?;
    encode_with_mask(image, &mask, quality, codec)
}

/// Base layer first, then the SCF layer on top of its reconstruction.
pub fn decode_image(bits: &ContainerBitstream, codecs: &CodecRegistry) -> Result<RgbImage> {
    let h = &bits.header;
    let codec = codecs.get(h.base_codec_id)?;
    let mask = bits.mask()?;
    let base_recon = match h.mode {
        ModeFlag::AllScf => neutral_canvas(h.width, h.height)?,
        _ => decode_base(codec.as_ref(), &bits.base_payload, h.width, h.height)?,
    };
    match h.mode {
        ModeFlag::AllBase => Ok(base_recon),
        _ => scf_decode_layer(&bits.scf_payload, &mask, &base_recon),
    }
}

pub fn decode_bytes(bytes: &[u8], codecs: &CodecRegistry) -> Result<RgbImage> {
    decode_image(&ContainerBitstream::deserialize(bytes)?, codecs)
}
