//! Screen-content image compression: a lossless soft-context-formation
//! coder, learned CTU segmentation, and a hybrid container pairing the
//! lossless layer with a pluggable lossy base codec.

pub mod codec;
pub mod container;
pub mod error;
pub mod eval;
pub mod image;
pub mod range_coder;
pub mod scf;
pub mod segmentation;
pub mod synth;

pub use error::{Error, Result};
pub use image::{Label, RgbImage, SegmentationMask};
