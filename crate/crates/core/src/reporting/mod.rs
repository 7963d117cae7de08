//! Configuration files, CSV output and histograms.

pub mod config;
pub mod hist;
pub mod output;

pub use config::{parse_config, parse_config_str, write_config};
pub use hist::{emit_histogram, histogram, Histogram};
pub use output::{emit_results, emit_sweep, emit_verification, RunManifest};
