//! Rate and quality measurement, BD-rate, and the per-block coder study.

pub mod akima;
pub mod bd;
pub mod metrics;
pub mod study;

pub use akima::{akima_interpolate, Akima};
pub use bd::{bd_rate, RdCurve, RdPoint, BD_SAMPLES};
pub use metrics::{bpp, log_domain_average, psnr_from_sse, psnr_rgb, squared_error, LogAverage, PSNR_CAP};
pub use study::{
    block_study, block_study_cached, block_study_dir, corpus_features, load_corpus, rd_sweep, training_sets, BlockRecord, BlockStudyReport,
    LevelSummary, SweepPoint,
};
