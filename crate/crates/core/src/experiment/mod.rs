// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment configuration, run directories and the stage pipeline.

mod config;
mod pipeline;
mod report;
mod run_dir;
mod svg;

pub use config::{
    AnalysisConfig, DiscoveryConfig, ExperimentConfig, ModelShape, Scale, StageTraining, CODE_VERSION,
};
pub use pipeline::{
    checkpoint_path, load_calibration, load_circuit, load_entities, load_model, load_scores, load_segments,
    load_tasks, load_tokenizer, run_all, run_stage, slug, AlignedSummary, ALIGNED_CSV, FORGET_CSV, HEADS_CSV,
    LENS_CSV, METRICS_CSV, PHASE_TSV, STAGES, TRANSFER_CSV,
};
pub use report::{report, Table};
pub use run_dir::{stamp_value, strip_stamp, RunDir, CONFIG_FILE};
pub use svg::{Chart, Series};
