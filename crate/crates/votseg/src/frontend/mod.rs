//! Audio to per-frame features, feature normalization, and the plain-text
//! feature matrix format for precomputed features.

mod features;
mod matrix_io;
mod norm;

pub use features::{
    extract, load_wav, AudioClip, FeatureSpec, FRAME_PERIOD_MS, MEASURES, SAMPLE_RATE_HZ,
};
pub use matrix_io::{
    format_matrix, load_precomputed, parse_matrix, read_header, write_precomputed,
};
pub use norm::{apply_norm, fit_norm, NormStats};
