// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact single-edge activation patching, for validating EAP-IG on small graphs.

use rayon::prelude::*;

use super::eap_ig::with_pool;
use super::loss::attribution_loss;
use crate::corpus::TaskExample;
use crate::error::{Error, Result};
use crate::model::{LogitRows, Model};

/// Largest graph the oracle accepts; each edge costs one forward per example.
pub const ORACLE_EDGE_CEILING: usize = 4096;

/// Loss change when only `edge` carries the corrupted source contribution,
/// averaged over `examples`. One entry per graph edge, canonical order.
pub fn patching_oracle(model: &Model, examples: &[TaskExample], jobs: usize) -> Result<Vec<f64>> {
    let graph = model.graph();
    if graph.n_edges() > ORACLE_EDGE_CEILING {
        return Err(Error::OracleCeiling {
            edges: graph.n_edges(),
            ceiling: ORACLE_EDGE_CEILING,
        });
    }
    if examples.is_empty() {
        return Err(Error::Contract("patching oracle needs at least one example".into()));
    }
    let per_example: Vec<Result<Vec<f64>>> = with_pool(jobs, || {
        examples
            .par_iter()
            .map(|ex| {
                let clean = model.last_logits(&ex.clean)?;
                let base = attribution_loss(&clean, ex.target, ex.corrupted_target)? as f64;
                let (_, corrupt) = model.run_with_cache(&ex.corrupted)?;
                let mut mask = vec![true; graph.n_edges()];
                let mut out = Vec::with_capacity(graph.n_edges());
                for e in 0..graph.n_edges() {
                    mask[e] = false;
                    let l = model.run_patched(&ex.clean, &mask, &corrupt.node_outputs, LogitRows::Last)?;
                    mask[e] = true;
                    out.push(attribution_loss(l.data(), ex.target, ex.corrupted_target)? as f64 - base);
                }
                Ok(out)
            })
            .collect()
    })?;
    let mut total = vec![0.0; graph.n_edges()];
    for r in per_example {
        for (t, v) in total.iter_mut().zip(r?) {
            *t += v;
        }
    }
    let n = examples.len() as f64;
    Ok(total.into_iter().map(|t| t / n).collect())
}
