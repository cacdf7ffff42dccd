//! File formats, pipeline orchestration, evaluation and the `changechip`
//! command line on top of [`changechip_core`].
//!
//! The pipeline for one image pair is
//!
//! ```text
//! crop (optional) → register (optional) → exact histogram match (optional)
//!     → PCA-Kmeans detection → class MSE / DBSCAN selection → artifacts
//! ```
//!
//! [`pipeline::run_pipeline`] writes `aligned.png`, `heatmap.png`,
//! `mask.png`, `overlay.png`, `classes.json` and `run.json` into an output
//! directory. [`eval::run_dataset`] runs every pair of a manifest and pools
//! pixel counts into precision and recall.

pub mod config;
pub mod dump;
pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use changechip_core as core;
pub use config::{Modality, PipelineConfig, Roi};
pub use error::{Error, Stage};
