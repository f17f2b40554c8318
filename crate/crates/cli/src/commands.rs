use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use scfh_core::codec::{BaseCodec, CodecRegistry};
use scfh_core::container::{decode_image, encode_image, mask_len, ContainerBitstream, HEADER_LEN};
use scfh_core::eval::{
    bd_rate, block_study_cached, corpus_features, load_corpus, rd_sweep, training_sets, RdCurve,
    SweepPoint,
};
use scfh_core::image::{load_ppm, save_ppm, Label, RgbImage};
use scfh_core::segmentation::{
    cross_validate, knn_train, load_model, majority_baseline, save_model, CachedOracle,
    FixedSegmenter, KnnModel, KnnModelSet, KnnSegmenter, Segmenter, SegmenterRegistry,
};
use scfh_core::synth;

use crate::{BenchArgs, Command, DecodeArgs, EncodeArgs, FeaturesArgs, GenCorpusArgs, TrainArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<scfh_core::Error> for CliError {
    fn from(e: scfh_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_ppm(path: &Path) -> CliResult<RgbImage> {
    load_ppm(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn codec(name: &str) -> CliResult<Arc<dyn BaseCodec>> {
    CodecRegistry::builtin().by_name(name).map_err(|e| CliError::Usage(e.to_string()))
}

fn model_path(dir: &Path, quality: u8) -> PathBuf {
    dir.join(format!("m{quality}.knn"))
}

fn load_model_file(path: &Path) -> CliResult<KnnModel> {
    load_model(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Every `*.knn` file of `dir`.
fn load_model_dir(dir: &Path) -> CliResult<KnnModelSet> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "knn"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!("{}: no .knn models", dir.display())));
    }
    let models = paths.iter().map(|p| load_model_file(p)).collect::<CliResult<Vec<_>>>()?;
    Ok(KnnModelSet::new(models)?)
}

fn corpus(dir: &Path) -> CliResult<(Vec<String>, Vec<RgbImage>)> {
    let files = load_corpus(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    if files.is_empty() {
        return Err(CliError::Data(format!("{}: empty corpus", dir.display())));
    }
    Ok(files.into_iter().unzip())
}

pub fn run(command: Command) -> CliResult<()> {
    let out = match command {
        Command::Encode(a) => encode(&a)?,
        Command::Decode(a) => decode(&a)?,
        Command::Train(a) => train(&a)?,
        Command::Features(a) => features(&a)?,
        Command::Bench(a) => bench(&a)?,
        Command::GenCorpus(a) => gen_corpus(&a)?,
    };
    print!("{out}");
    Ok(())
}

fn encode(a: &EncodeArgs) -> CliResult<String> {
    let segmenter: Box<dyn Segmenter> = match (&a.model, a.oracle) {
        (Some(path), false) => {
            let model = load_model_file(path)?;
            if model.quality() != a.quality {
                return Err(CliError::Data(format!(
                    "{}: model trained for quality {}, encoding at {}",
                    path.display(),
                    model.quality(),
                    a.quality
                )));
            }
            Box::new(KnnSegmenter::new(model))
        }
        (None, true) => Box::new(CachedOracle::new()),
        _ => return Err(CliError::Usage("model required: pass --model <file> or --oracle".into())),
    };
    let codec = codec(&a.codec)?;
    let image = read_ppm(&a.input)?;
    let report = encode_image(&image, a.quality, a.ctu, segmenter.as_ref(), codec.as_ref())?;
    let bytes = report.bitstream.serialize()?;
    write(&a.output, &bytes)?;

    let b = &report.bitstream;
    let mask_bytes = if b.labels.is_empty() { 0 } else { mask_len(b.labels.len()) };
    Ok(format!(
        "mode={} width={} height={} ctus={} scf_ctus={} bytes={} header_bytes={} mask_bytes={} \
         base_bytes={} scf_bytes={} bpp={:.4} scf_pixel_pct={:.2}\n",
        b.header.mode.name(),
        image.width(),
        image.height(),
        report.mask.labels().len(),
        report.mask.count(Label::Scf),
        bytes.len(),
        HEADER_LEN,
        mask_bytes,
        b.base_payload.len(),
        b.scf_payload.len(),
        8.0 * bytes.len() as f64 / image.area() as f64,
        100.0 * report.scf_pixel_fraction(),
    ))
}

fn label_name(l: Label) -> &'static str {
    match l {
        Label::Scf => "SCF",
        Label::Base => "BASE",
    }
}

fn decode(a: &DecodeArgs) -> CliResult<String> {
    let bytes = read(&a.input)?;
    let bits = ContainerBitstream::deserialize(&bytes)?;
    let image = decode_image(&bits, &CodecRegistry::builtin())?;
    write(&a.output, &save_ppm(&image))?;

    let mask = bits.mask()?;
    let mut s = format!(
        "mode={} width={} height={} quality={} ctu={} ctus={} scf_ctus={} base_ctus={} scf_pixel_pct={:.2}\n",
        bits.header.mode.name(),
        image.width(),
        image.height(),
        bits.header.quality,
        bits.header.ctu_size,
        mask.labels().len(),
        mask.count(Label::Scf),
        mask.count(Label::Base),
        100.0 * mask.pixel_count(Label::Scf) as f64 / image.area() as f64,
    );
    if a.ctus {
        for (i, r) in mask.grid().rects() {
            let _ = writeln!(
                s,
                "ctu={i} x={} y={} width={} height={} source={}",
                r.x,
                r.y,
                r.width,
                r.height,
                label_name(mask.labels()[i])
            );
        }
    }
    Ok(s)
}

fn train(a: &TrainArgs) -> CliResult<String> {
    if a.qualities.is_empty() {
        return Err(CliError::Usage("no quality levels".into()));
    }
    let codec = codec(&a.codec)?;
    let (_, images) = corpus(&a.corpus)?;
    let study = block_study_cached(&images, a.ctu, codec.as_ref(), &a.qualities, &CachedOracle::new())?;
    let sets = training_sets(&images, a.ctu, &study)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::Data(format!("{}: {e}", a.out_dir.display())))?;

    let mut s = String::new();
    for (q, samples) in &sets {
        let model = knn_train(samples, a.k)?;
        let accuracy = cross_validate(samples, a.k, a.folds)?;
        let path = model_path(&a.out_dir, *q);
        write(&path, &save_model(&model))?;
        let scf = samples.iter().filter(|s| s.label == Label::Scf).count();
        let _ = writeln!(
            s,
            "q={q} samples={} scf={scf} k={} folds={} cv_accuracy={accuracy:.4} majority_baseline={:.4} model={}",
            samples.len(),
            a.k,
            a.folds,
            majority_baseline(samples),
            path.display()
        );
    }
    Ok(s)
}

fn features(a: &FeaturesArgs) -> CliResult<String> {
    let image = read_ppm(&a.input)?;
    let grid = scfh_core::image::CtuGrid::for_image(&image, a.ctu)?;
    let rows = corpus_features(std::slice::from_ref(&image), a.ctu)?;
    let mut s = String::from(
        "ctu,x,y,width,height,colors_norm,patterns_norm,stage23_color_entropy,conditional_entropy\n",
    );
    for ((_, c), f) in rows {
        let r = grid.rect(c);
        let _ = writeln!(
            s,
            "{c},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.x, r.y, r.width, r.height, f.colors_norm, f.patterns_norm, f.stage23_color_entropy,
            f.conditional_entropy
        );
    }
    Ok(s)
}

fn sweep_lines(name: &str, points: &[SweepPoint], s: &mut String) {
    for p in points {
        let rd = p.rd_point();
        let _ = writeln!(
            s,
            "sweep pipeline={name} q={} bytes={} bpp={:.6} psnr={:.4} scf_pixel_pct={:.2}",
            p.quality,
            p.bytes,
            rd.rate,
            rd.quality,
            100.0 * p.scf_pixels as f64 / p.pixels as f64
        );
    }
}

fn bench(a: &BenchArgs) -> CliResult<String> {
    let codec = codec(&a.codec)?;
    let (_, images) = corpus(&a.corpus)?;
    let oracle = Arc::new(CachedOracle::new());
    let mut registry = SegmenterRegistry::default();
    registry.register(oracle.clone())?;
    registry.register(Arc::new(FixedSegmenter(Label::Scf)))?;
    registry.register(Arc::new(FixedSegmenter(Label::Base)))?;
    if let Some(dir) = &a.models {
        registry.register(Arc::new(load_model_dir(dir)?))?;
    }
    let pick = |name: &str| registry.get(name).map_err(|e| CliError::Usage(e.to_string()));
    let (reference, test) = (pick(&a.reference)?, pick(&a.test)?);

    let mut s = String::new();
    if !a.no_study {
        let study = block_study_cached(&images, a.ctu, codec.as_ref(), &a.qualities, &oracle)?;
        s.push_str(&study.table());
        match &a.csv {
            Some(path) => write(path, study.to_csv().as_bytes())?,
            None => s.push_str(&study.to_csv()),
        }
    }

    let ref_points = rd_sweep(&images, a.ctu, reference.as_ref(), codec.as_ref(), &a.qualities)?;
    sweep_lines(reference.name(), &ref_points, &mut s);
    let test_points = if a.test == a.reference {
        ref_points.clone()
    } else {
        let p = rd_sweep(&images, a.ctu, test.as_ref(), codec.as_ref(), &a.qualities)?;
        sweep_lines(test.name(), &p, &mut s);
        p
    };

    let curve = |pts: &[SweepPoint]| RdCurve::new(pts.iter().map(SweepPoint::rd_point).collect());
    let bd = curve(&ref_points).and_then(|r| bd_rate(&r, &curve(&test_points)?));
    match bd {
        Ok(v) => {
            let _ = writeln!(s, "bd_rate reference={} test={} percent={v:.4}", a.reference, a.test);
        }
        Err(e) => {
            eprintln!("scfh: BD-rate unavailable: {e}");
            let _ = writeln!(s, "bd_rate reference={} test={} percent=nan", a.reference, a.test);
        }
    }
    Ok(s)
}

fn gen_corpus(a: &GenCorpusArgs) -> CliResult<String> {
    if a.width == 0 || a.height == 0 {
        return Err(CliError::Usage("width and height must be positive".into()));
    }
    scfh_core::image::check_dimensions(u64::from(a.width), u64::from(a.height))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::Data(format!("{}: {e}", a.out_dir.display())))?;
    let mut s = String::new();
    for (name, img) in synth::corpus(a.seed, a.per_kind, a.width, a.height) {
        let path = a.out_dir.join(&name);
        write(&path, &save_ppm(&img))?;
        let _ = writeln!(s, "{}", path.display());
    }
    Ok(s)
}
