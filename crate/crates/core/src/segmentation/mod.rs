//! CTU classification into the SCF and base layers.

pub mod features;
pub mod knn;
pub mod model_file;
pub mod segmenter;

pub use features::{
    extract_features, simplified_pattern_stats, BlockFeatures, PatternStats, FEATURE_COUNT,
};
pub use knn::{
    cross_validate, knn_classify, knn_train, majority_baseline, FeatureScale, KnnModel,
    TrainingSample, DEFAULT_FOLDS, DEFAULT_K,
};
pub use model_file::{load_model, save_model};
pub use segmenter::{
    oracle_label, oracle_rates, segment_image, BlockRates, CachedOracle, FixedSegmenter, KnnModelSet, KnnSegmenter,
    OracleSegmenter, Segmenter, SegmenterRegistry,
};
