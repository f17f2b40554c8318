mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scfh_core::image::DEFAULT_CTU_SIZE;
use scfh_core::segmentation::{DEFAULT_FOLDS, DEFAULT_K};

pub const DEFAULT_QUALITIES: [u8; 4] = [22, 27, 32, 37];

/// Hybrid screen-content image coder: soft-context-formation lossless
/// coding for CTUs it wins on, a lossy base codec for the rest.
#[derive(Debug, Parser)]
#[command(name = "scfh", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a PPM image into a .scfh container.
    Encode(EncodeArgs),
    /// Decode a .scfh container into a PPM image.
    Decode(DecodeArgs),
    /// Train one classifier per quality level from a PPM corpus.
    Train(TrainArgs),
    /// Print the classifier features of every CTU of an image.
    Features(FeaturesArgs),
    /// Block study, RD sweeps and BD-rate over a PPM corpus.
    Bench(BenchArgs),
    /// Write a seeded synthetic PPM corpus.
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Quality level (base codec QP).
    #[arg(long = "q", default_value_t = 22)]
    pub quality: u8,
    /// kNN model file trained for this quality level.
    #[arg(long, conflicts_with = "oracle")]
    pub model: Option<PathBuf>,
    /// Label CTUs by coding them both ways.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = DEFAULT_CTU_SIZE)]
    pub ctu: u32,
    /// Base codec name.
    #[arg(long, default_value = "stub")]
    pub codec: String,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Also print one line per CTU with its source layer.
    #[arg(long)]
    pub ctus: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of PPM images.
    pub corpus: PathBuf,
    /// Directory receiving m<q>.knn files.
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    #[arg(long = "q", value_delimiter = ',', default_values_t = DEFAULT_QUALITIES)]
    pub qualities: Vec<u8>,
    #[arg(long, default_value_t = DEFAULT_CTU_SIZE)]
    pub ctu: u32,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value = "stub")]
    pub codec: String,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CTU_SIZE)]
    pub ctu: u32,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of PPM images.
    pub corpus: PathBuf,
    #[arg(long = "q", value_delimiter = ',', default_values_t = DEFAULT_QUALITIES)]
    pub qualities: Vec<u8>,
    #[arg(long, default_value_t = DEFAULT_CTU_SIZE)]
    pub ctu: u32,
    #[arg(long, default_value = "stub")]
    pub codec: String,
    /// Reference pipeline for the BD-rate.
    #[arg(long, default_value = "all-base")]
    pub reference: String,
    /// Test pipeline for the BD-rate.
    #[arg(long, default_value = "oracle")]
    pub test: String,
    /// Directory of m<q>.knn files; enables the `knn` pipeline.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Write per-block records here instead of standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Skip the per-block study.
    #[arg(long)]
    pub no_study: bool,
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Images per content kind.
    #[arg(long, default_value_t = 4)]
    pub per_kind: usize,
    #[arg(long, default_value_t = 256)]
    pub width: u32,
    #[arg(long, default_value_t = 256)]
    pub height: u32,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("SCFH_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("SCFH_THREADS: not a number: {v}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("SCFH_THREADS: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("scfh: {e}");
        return ExitCode::from(commands::EXIT_USAGE);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scfh: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
