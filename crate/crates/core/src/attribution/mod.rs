// SPDX-License-Identifier: MIT OR Apache-2.0

//! Edge scoring, circuit extraction and ablated circuit evaluation.

mod calibrate;
mod circuit;
mod eap_ig;
mod evaluate;
mod loss;
mod oracle;

pub use calibrate::{calibrate_edge_budget, sweep_sizes, Calibration, SWEEP_START};
pub use circuit::{extract_circuit, ranked_edges, scores_from_text, scores_to_text, Circuit};
pub use eap_ig::{eap_ig_scores, example_scores, with_pool, EdgeScores, ScoreMeta, POSITION_CONTRACTION};
pub use evaluate::{evaluate_circuit, evaluate_mask, CircuitEval, PreparedSet};
pub use loss::{attribution_loss, logit_difference_loss};
pub use oracle::{patching_oracle, ORACLE_EDGE_CEILING};

/// Integrated-gradient steps when unset.
pub const DEFAULT_STEPS: usize = 5;
/// Share of whole-model Hit@10 a calibrated circuit must keep.
pub const DEFAULT_TARGET: f64 = 0.7;
