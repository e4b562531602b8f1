//! The two-stage recognition flow: dataset handling, training, per-image
//! classification, evaluation reports, segmentation runs and the synthetic
//! data generator.

pub mod config;
pub mod dataset;
pub mod evaluate;
pub mod export;
pub mod model;
pub mod segment;
pub mod synth;

pub use config::{RunConfig, Stage2Feature};
pub use dataset::{load_dataset, split, Dataset, Item, Regime};
pub use evaluate::{evaluate, evaluate_with, EvalReport, StageReport};
pub use export::{feature_csv, intermediate_rasters, write_feature_csv};
pub use model::{classify_image, train_pipeline, train_pipeline_with, Classification, PipelineModel};
pub use segment::{run_segmentation, SegmentOptions, SegmentSummary, Segmenter};
