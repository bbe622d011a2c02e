// SPDX-License-Identifier: MIT OR Apache-2.0

//! Edge budget: the smallest circuit that keeps a target share of whole-model Hit@10.

use serde::{Deserialize, Serialize};

use super::circuit::extract_circuit;
use super::eap_ig::EdgeScores;
use super::evaluate::{evaluate_circuit, PreparedSet};
use crate::error::{Error, Result};
use crate::model::Model;

pub const SWEEP_START: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n_edges: usize,
    pub target: f64,
    pub whole_model_hit: f64,
    pub circuit_hit: f64,
    /// Whole-model Hit@10 was 0, so every budget passes.
    pub degenerate: bool,
    /// `(n, circuit Hit@10)` for each budget tried.
    pub sweep: Vec<(usize, f64)>,
}

/// Budgets `16, 32, 64, ...` capped at the edge count.
pub fn sweep_sizes(n_edges: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = SWEEP_START;
    while n < n_edges {
        out.push(n);
        n *= 2;
    }
    out.push(n_edges);
    out
}

pub fn calibrate_edge_budget(
    model: &Model,
    scores: &EdgeScores,
    val: &PreparedSet<'_>,
    target: f64,
    jobs: usize,
) -> Result<Calibration> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Config(format!("calibration target must be in (0, 1], got {target}")));
    }
    let graph = model.graph();
    let whole = val.whole_model()?.hit_at_10;
    let sizes = sweep_sizes(graph.n_edges());
    if whole == 0.0 {
        return Ok(Calibration {
            n_edges: sizes[0],
            target,
            whole_model_hit: 0.0,
            circuit_hit: 0.0,
            degenerate: true,
            sweep: Vec::new(),
        });
    }
    let mut sweep = Vec::new();
    for n in sizes {
        let hit = evaluate_circuit(model, &extract_circuit(graph, scores, n)?, val, jobs)?.hit_at_10;
        sweep.push((n, hit));
        // Small slack so the full circuit passes despite float noise in the patched path.
        if hit + 1e-12 >= target * whole {
            return Ok(Calibration {
                n_edges: n,
                target,
                whole_model_hit: whole,
                circuit_hit: hit,
                degenerate: false,
                sweep,
            });
        }
    }
    Err(Error::Numerical(format!(
        "no circuit reached {target} of whole-model Hit@10 {whole}; sweep {sweep:?}"
    )))
}
