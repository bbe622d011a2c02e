// SPDX-License-Identifier: MIT OR Apache-2.0

//! Checkpoint-level measurements.

mod accuracy;
mod activation;
mod forgetting;
mod heads;
mod lens;
mod metrics;
mod phase;
mod rows;
mod transfer;

pub use accuracy::{example_accuracy, whole_model_accuracies, Accuracies};
pub use activation::{edge_activation_ratio, ActivationRatios};
pub use forgetting::{edge_set, forgetting_analysis, node_set, ForgettingPoint};
pub use heads::{
    classify_dla, classify_heads, classify_ratio, example_dla, head_counts, HeadClass, HeadKind, DEFAULT_TAU,
    DLA_PROJECTION,
};
pub use lens::{boundary_residuals, lens_table, logit_lens_trace, median, LensPoint};
pub use metrics::{average_ranks, circuit_entropy, hit_at_10, hit_at_k, jaccard, pearson, smooth, spearman};
pub use phase::{detect_phase_shift, two_segment_fit, PhaseShift, MIN_POINTS, SLOPE_RATIO};
pub use rows::{csv_header, metrics_csv, MetricsRow};
pub use transfer::transfer_matrix;

/// Entropy is reported in nats.
pub const ENTROPY_BASE: &str = "e";
/// Smoothing window for epoch curves.
pub const SMOOTHING_WINDOW: usize = 3;
