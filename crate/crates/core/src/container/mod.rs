//! Hybrid container: header, optional CTU mask, base and SCF payloads.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SCFH"
//! 4       1     version (1)
//! 5       1     flags: bits 0-1 mode (0 ALL_SCF, 1 ALL_BASE, 2 MIXED), bits 2-7 zero
//! 6       1     quality level
//! 7       4     width
//! 11      4     height
//! 15      1     base codec id
//! 16      2     CTU size
//! 18      m     MIXED only: ceil(nCTU / 8) bytes, one bit per CTU in raster
//!               order, MSB first, 1 = SCF, padding bits zero
//! ..      4     base payload length, then the base payload
//! ..      4     SCF payload length, then the SCF payload
//! ```
//! All integers are big-endian. Nothing may follow the SCF payload.

mod pipeline;

pub use pipeline::{decode_bytes, decode_image, encode_image, encode_with_mask, EncodeReport};

use crate::error::{Error, Result};
use crate::image::{check_dimensions, CtuGrid, Label, SegmentationMask};

pub const MAGIC: &[u8; 4] = b"SCFH";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeFlag {
    AllScf = 0,
    AllBase = 1,
    Mixed = 2,
}

impl ModeFlag {
    pub fn for_mask(mask: &SegmentationMask) -> Self {
        match (mask.count(Label::Scf), mask.count(Label::Base)) {
            (_, 0) => ModeFlag::AllScf,
            (0, _) => ModeFlag::AllBase,
            _ => ModeFlag::Mixed,
        }
    }

    fn from_bits(v: u8) -> Result<Self> {
        match v {
            0 => Ok(ModeFlag::AllScf),
            1 => Ok(ModeFlag::AllBase),
            2 => Ok(ModeFlag::Mixed),
            _ => Err(Error::Container(format!("invalid mode {v}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeFlag::AllScf => "ALL_SCF",
            ModeFlag::AllBase => "ALL_BASE",
            ModeFlag::Mixed => "MIXED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub mode: ModeFlag,
    pub quality: u8,
    pub width: u32,
    pub height: u32,
    pub base_codec_id: u8,
    pub ctu_size: u16,
}

impl ContainerHeader {
    pub fn grid(&self) -> Result<CtuGrid> {
        CtuGrid::new(self.width, self.height, u32::from(self.ctu_size))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerBitstream {
    pub header: ContainerHeader,
    /// Per-CTU labels; empty unless the mode is MIXED.
    pub labels: Vec<Label>,
    pub base_payload: Vec<u8>,
    pub scf_payload: Vec<u8>,
}

pub fn mask_len(ctus: usize) -> usize {
    ctus.div_ceil(8)
}

fn pack_mask(labels: &[Label]) -> Vec<u8> {
    let mut out = vec![0u8; mask_len(labels.len())];
    for (i, &l) in labels.iter().enumerate() {
        if l == Label::Scf {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

impl ContainerBitstream {
    /// The segmentation the container encodes, expanded for uniform modes.
    pub fn mask(&self) -> Result<SegmentationMask> {
        let grid = self.header.grid()?;
        match self.header.mode {
            ModeFlag::AllScf => Ok(SegmentationMask::uniform(grid, Label::Scf)),
            ModeFlag::AllBase => Ok(SegmentationMask::uniform(grid, Label::Base)),
            ModeFlag::Mixed => SegmentationMask::new(grid, self.labels.clone()),
        }
    }

    fn validate(&self) -> Result<()> {
        let h = &self.header;
        check_dimensions(h.width.into(), h.height.into())?;
        let grid = h.grid()?;
        match h.mode {
            ModeFlag::AllScf if !self.base_payload.is_empty() => {
                return Err(Error::Container("ALL_SCF container with a base payload".into()))
            }
            ModeFlag::AllBase if !self.scf_payload.is_empty() => {
                return Err(Error::Container("ALL_BASE container with an SCF payload".into()))
            }
            ModeFlag::Mixed => {
                if self.labels.len() != grid.len() {
                    return Err(Error::Container("mask length does not match CTU count".into()));
                }
                let scf = self.labels.iter().filter(|&&l| l == Label::Scf).count();
                if scf == 0 || scf == self.labels.len() {
                    return Err(Error::Container("MIXED container with a uniform mask".into()));
                }
            }
            _ if !self.labels.is_empty() => {
                return Err(Error::Container("mask present outside MIXED mode".into()))
            }
            _ => {}
        }
        for p in [&self.base_payload, &self.scf_payload] {
            if u32::try_from(p.len()).is_err() {
                return Err(Error::Container("payload exceeds 4 GiB".into()));
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let h = &self.header;
        let mut out = Vec::with_capacity(
            HEADER_LEN + 8 + mask_len(self.labels.len()) + self.base_payload.len() + self.scf_payload.len(),
        );
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(h.mode as u8);
        out.push(h.quality);
        out.extend_from_slice(&h.width.to_be_bytes());
        out.extend_from_slice(&h.height.to_be_bytes());
        out.push(h.base_codec_id);
        out.extend_from_slice(&h.ctu_size.to_be_bytes());
        if h.mode == ModeFlag::Mixed {
            out.extend_from_slice(&pack_mask(&self.labels));
        }
        for p in [&self.base_payload, &self.scf_payload] {
            out.extend_from_slice(&(p.len() as u32).to_be_bytes());
            out.extend_from_slice(p);
        }
        Ok(out)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::Container("bad magic".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated);
        }
        if bytes[4] != VERSION {
            return Err(Error::Container(format!("unsupported version {}", bytes[4])));
        }
        let flags = bytes[5];
        if flags & !0b11 != 0 {
            return Err(Error::Container(format!("reserved flag bits set: {flags:#04x}")));
        }
        let be32 = |at: usize| u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap());
        let header = ContainerHeader {
            mode: ModeFlag::from_bits(flags)?,
            quality: bytes[6],
            width: be32(7),
            height: be32(11),
            base_codec_id: bytes[15],
            ctu_size: u16::from_be_bytes([bytes[16], bytes[17]]),
        };
        check_dimensions(header.width.into(), header.height.into())?;
        let grid = header.grid()?;

        let mut rest = &bytes[HEADER_LEN..];
        let mut take = |n: usize| -> Result<&[u8]> {
            if rest.len() < n {
                return Err(Error::Truncated);
            }
            let (head, tail) = rest.split_at(n);
            rest = tail;
            Ok(head)
        };

        let mut labels = Vec::new();
        if header.mode == ModeFlag::Mixed {
            let n = grid.len();
            let packed = take(mask_len(n))?;
            labels = (0..n)
                .map(|i| if packed[i / 8] & (0x80 >> (i % 8)) != 0 { Label::Scf } else { Label::Base })
                .collect();
            if pack_mask(&labels) != packed {
                return Err(Error::Container("nonzero mask padding bits".into()));
            }
        }
        let mut payload = || -> Result<Vec<u8>> {
            let len = u32::from_be_bytes(take(4)?.try_into().unwrap()) as usize;
            Ok(take(len)?.to_vec())
        };
        let base_payload = payload()?;
        let scf_payload = payload()?;
        if !rest.is_empty() {
            return Err(Error::Container(format!("{} trailing bytes", rest.len())));
        }
        let bits = ContainerBitstream { header, labels, base_payload, scf_payload };
        bits.validate()?;
        Ok(bits)
    }
}
