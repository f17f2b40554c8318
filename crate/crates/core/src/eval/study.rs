use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::bd::RdPoint;
use super::metrics::{psnr_from_sse, squared_error};
use crate::codec::BaseCodec;
use crate::container::encode_image;
use crate::error::{Error, Result};
use crate::image::{load_ppm, CtuGrid, Label, RgbImage};
use crate::segmentation::{
    extract_features, BlockFeatures, BlockRates, CachedOracle, Segmenter, TrainingSample,
};
use std::collections::BTreeMap;

/// PPM files of a directory, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, RgbImage)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let bytes = std::fs::read(&p)?;
            let img = load_ppm(&bytes)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?;
            Ok((name, img))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRecord {
    pub image: usize,
    pub ctu: usize,
    pub quality: u8,
    pub pixels: usize,
    pub rates: BlockRates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSummary {
    pub quality: u8,
    pub blocks: usize,
    pub scf_wins: usize,
    pub scf_wins_fraction: f64,
    pub scf_pixel_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockStudyReport {
    pub records: Vec<BlockRecord>,
    pub levels: Vec<LevelSummary>,
}

impl BlockStudyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("image,ctu,quality,pixels,scf_bits,base_bits,label\n");
        for r in &self.records {
            let label = if r.rates.label() == Label::Scf { "SCF" } else { "BASE" };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{label}",
                r.image, r.ctu, r.quality, r.pixels, r.rates.scf_bits, r.rates.base_bits
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = String::from("quality  blocks  scf_wins  scf_block_%  scf_pixel_%\n");
        for l in &self.levels {
            let _ = writeln!(
                s,
                "{:>7}  {:>6}  {:>8}  {:>11.2}  {:>11.2}",
                l.quality,
                l.blocks,
                l.scf_wins,
                100.0 * l.scf_wins_fraction,
                100.0 * l.scf_pixel_fraction
            );
        }
        s
    }
}

/// Codes every CTU of every image both ways at each quality level.
pub fn block_study(
    images: &[RgbImage],
    ctu_size: u32,
    codec: &dyn BaseCodec,
    qualities: &[u8],
) -> Result<BlockStudyReport> {
    block_study_cached(images, ctu_size, codec, qualities, &CachedOracle::new())
}

/// [`block_study`] sharing SCF rates with `oracle`.
pub fn block_study_cached(
    images: &[RgbImage],
    ctu_size: u32,
    codec: &dyn BaseCodec,
    qualities: &[u8],
    oracle: &CachedOracle,
) -> Result<BlockStudyReport> {
    if images.is_empty() {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    let mut blocks = Vec::new();
    for (i, img) in images.iter().enumerate() {
        for (c, rect) in CtuGrid::for_image(img, ctu_size)?.rects() {
            blocks.push((i, c, rect));
        }
    }
    let per_block: Vec<Vec<BlockRecord>> = blocks
        .par_iter()
        .map(|&(i, c, rect)| {
            let block = images[i].crop(rect);
            qualities
                .iter()
                .map(|&q| {
                    Ok(BlockRecord {
                        image: i,
                        ctu: c,
                        quality: q,
                        pixels: rect.area(),
                        rates: oracle.rates(&block, codec, q)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<BlockRecord> = per_block.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.quality, r.image, r.ctu));
    let levels = qualities
        .iter()
        .map(|&q| {
            let rs: Vec<&BlockRecord> = records.iter().filter(|r| r.quality == q).collect();
            let wins: Vec<&&BlockRecord> = rs.iter().filter(|r| r.rates.label() == Label::Scf).collect();
            let pixels: usize = rs.iter().map(|r| r.pixels).sum();
            let scf_pixels: usize = wins.iter().map(|r| r.pixels).sum();
            LevelSummary {
                quality: q,
                blocks: rs.len(),
                scf_wins: wins.len(),
                scf_wins_fraction: wins.len() as f64 / rs.len() as f64,
                scf_pixel_fraction: scf_pixels as f64 / pixels as f64,
            }
        })
        .collect();
    Ok(BlockStudyReport { records, levels })
}

pub fn block_study_dir(
    dir: &Path,
    ctu_size: u32,
    codec: &dyn BaseCodec,
    qualities: &[u8],
) -> Result<BlockStudyReport> {
    let images: Vec<RgbImage> = load_corpus(dir)?.into_iter().map(|(_, img)| img).collect();
    block_study(&images, ctu_size, codec, qualities)
}

/// Features of every CTU of `images`, in (image, ctu) order.
pub fn corpus_features(images: &[RgbImage], ctu_size: u32) -> Result<Vec<((usize, usize), BlockFeatures)>> {
    let mut blocks = Vec::new();
    for (i, img) in images.iter().enumerate() {
        for (c, rect) in CtuGrid::for_image(img, ctu_size)?.rects() {
            blocks.push((i, c, rect));
        }
    }
    Ok(blocks
        .par_iter()
        .map(|&(i, c, rect)| ((i, c), extract_features(&images[i].crop(rect))))
        .collect())
}

/// Oracle-labeled training samples per quality level of `report`.
pub fn training_sets(
    images: &[RgbImage],
    ctu_size: u32,
    report: &BlockStudyReport,
) -> Result<BTreeMap<u8, Vec<TrainingSample>>> {
    let features: BTreeMap<(usize, usize), BlockFeatures> =
        corpus_features(images, ctu_size)?.into_iter().collect();
    let mut sets: BTreeMap<u8, Vec<TrainingSample>> = BTreeMap::new();
    for r in &report.records {
        let f = features
            .get(&(r.image, r.ctu))
            .ok_or_else(|| Error::InvalidInput(format!("report block {}/{} not in corpus", r.image, r.ctu)))?;
        sets.entry(r.quality).or_default().push(TrainingSample {
            features: *f,
            label: r.rates.label(),
            quality: r.quality,
        });
    }
    Ok(sets)
}

/// Totals of one pipeline over a corpus at one quality level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub quality: u8,
    pub bytes: u64,
    pub pixels: u64,
    pub scf_pixels: u64,
    pub sse: u64,
    pub samples: u64,
}

impl SweepPoint {
    /// Corpus bpp against pooled-MSE PSNR.
    pub fn rd_point(&self) -> RdPoint {
        RdPoint::new(8.0 * self.bytes as f64 / self.pixels as f64, psnr_from_sse(self.sse, self.samples))
    }
}

/// Encodes the corpus with `segmenter` at each quality level.
pub fn rd_sweep(
    images: &[RgbImage],
    ctu_size: u32,
    segmenter: &dyn Segmenter,
    codec: &dyn BaseCodec,
    qualities: &[u8],
) -> Result<Vec<SweepPoint>> {
    if images.is_empty() {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    qualities
        .iter()
        .map(|&q| {
            let parts = images
                .par_iter()
                .map(|img| {
                    let r = encode_image(img, q, ctu_size, segmenter, codec)?;
                    let (sse, samples) = squared_error(img, &r.reconstruction)?;
                    Ok(SweepPoint {
                        quality: q,
                        bytes: r.bitstream.serialize()?.len() as u64,
                        pixels: img.area() as u64,
                        scf_pixels: r.mask.pixel_count(Label::Scf) as u64,
                        sse,
                        samples,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(parts.into_iter().fold(
                SweepPoint { quality: q, bytes: 0, pixels: 0, scf_pixels: 0, sse: 0, samples: 0 },
                |a, p| SweepPoint {
                    quality: q,
                    bytes: a.bytes + p.bytes,
                    pixels: a.pixels + p.pixels,
                    scf_pixels: a.scf_pixels + p.scf_pixels,
                    sse: a.sse + p.sse,
                    samples: a.samples + p.samples,
                },
            ))
        })
        .collect()
}
