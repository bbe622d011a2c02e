// SPDX-License-Identifier: MIT OR Apache-2.0

//! Edge attribution patching with integrated gradients.
//!
//! For an edge `u -> v` the score is `(z'_u - z_u) · g_v`, where `z_u` and
//! `z'_u` are node `u`'s residual contributions on the clean and corrupted
//! prompts and `g_v` is the gradient of the loss with respect to `v`'s input,
//! averaged over `m` runs whose input embedding moves from the corrupted
//! embedding to the clean one in steps `k / m`, `k = 1..=m`. The dot product
//! sums over positions and residual dimensions; scores are averaged over
//! examples.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::logit_difference_loss;
use crate::autodiff::{Tape, Tensor};
use crate::corpus::TaskExample;
use crate::error::{Error, Result};
use crate::graph::{Channel, CompGraph, NodeId, ReadPoint};
use crate::model::{node_slot, LogitRows, Model};

/// How the per-position products of an edge score are combined.
pub const POSITION_CONTRACTION: &str = "sum";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeta {
    pub steps: usize,
    pub examples: usize,
    pub checkpoint: String,
    pub position_contraction: String,
}

/// One score per graph edge, in canonical edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeScores {
    pub scores: Vec<f64>,
    pub meta: ScoreMeta,
}

impl EdgeScores {
    pub fn validate(&self, graph: &CompGraph) -> Result<()> {
        if self.scores.len() != graph.n_edges() {
            return Err(Error::Contract(format!(
                "{} scores for a graph with {} edges",
                self.scores.len(),
                graph.n_edges()
            )));
        }
        if let Some(i) = self.scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Numerical(format!("non-finite score on edge {}", graph.edge(i))));
        }
        Ok(())
    }
}

/// Run `f` on a dedicated pool of `jobs` threads (`0` = rayon's default).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Per-edge scores for a single example (not yet averaged).
pub fn example_scores(model: &Model, ex: &TaskExample, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Contract("integrated-gradient steps must be at least 1".into()));
    }
    if ex.clean.len() != ex.corrupted.len() {
        return Err(Error::Contract(format!(
            "clean and corrupted prompts differ in length for {}",
            ex.subject
        )));
    }
    let graph = model.graph();
    let (nh, nl) = (graph.n_heads(), graph.n_layers());
    let (_, clean) = model.run_with_cache(&ex.clean)?;
    let (_, corrupt) = model.run_with_cache(&ex.corrupted)?;
    let diffs: Vec<Tensor> = corrupt
        .node_outputs
        .iter()
        .zip(&clean.node_outputs)
        .map(|(c, z)| c.sub(z))
        .collect::<Result<_>>()?;

    let z = &clean.node_outputs[0];
    let zc = &corrupt.node_outputs[0];
    let mut grads: HashMap<ReadPoint, Tensor> = HashMap::new();
    let mut tape = Tape::new();
    for k in 1..=steps {
        tape.clear();
        let alpha = k as f32 / steps as f32;
        let interp: Vec<f32> = zc
            .data()
            .iter()
            .zip(z.data())
            .map(|(&c, &x)| c + alpha * (x - c))
            .collect();
        let interp = Tensor::new(z.shape().to_vec(), interp)?;
        let vars = model.params.bind(&mut tape, false);
        let emb = tape.leaf(interp, true);
        let run = model.run_hooked(&mut tape, &vars, &ex.clean, Some(emb), None, LogitRows::Last)?;
        let loss = logit_difference_loss(&mut tape, run.logits, ex.target, ex.corrupted_target)?;
        tape.backward(loss)?;
        for (point, var) in &run.read_inputs {
            let g = tape
                .grad(*var)
                .ok_or_else(|| Error::Contract(format!("no gradient captured at {}.{}", point.node, point.channel)))?;
            match grads.get_mut(point) {
                Some(acc) => acc.add_assign(g)?,
                None => {
                    grads.insert(*point, g.clone());
                }
            }
        }
    }

    let inv = 1.0 / steps as f64;
    graph
        .edges()
        .iter()
        .map(|e| {
            let point = ReadPoint {
                node: e.destination,
                channel: e.channel,
            };
            let g = grads
                .get(&point)
                .ok_or_else(|| Error::Contract(format!("no gradient captured for read point of {e}")))?;
            let d = &diffs[node_slot(nh, nl, e.source)];
            Ok(d.dot(g)? * inv)
        })
        .collect()
}

/// EAP-IG scores averaged over `examples`, computed on up to `jobs` threads.
///
/// Per-example vectors are summed in example order, so the result does not
/// depend on the thread count.
pub fn eap_ig_scores(
    model: &Model,
    examples: &[TaskExample],
    steps: usize,
    jobs: usize,
    checkpoint: &str,
) -> Result<EdgeScores> {
    if examples.is_empty() {
        return Err(Error::Contract("EAP-IG needs at least one example".into()));
    }
    let per_example: Vec<Result<Vec<f64>>> =
        with_pool(jobs, || examples.par_iter().map(|ex| example_scores(model, ex, steps)).collect())?;
    let mut total = vec![0.0f64; model.graph().n_edges()];
    for r in per_example {
        for (t, s) in total.iter_mut().zip(r?) {
            *t += s;
        }
    }
    let n = examples.len() as f64;
    total.iter_mut().for_each(|t| *t /= n);
    let scores = EdgeScores {
        scores: total,
        meta: ScoreMeta {
            steps,
            examples: examples.len(),
            checkpoint: checkpoint.to_string(),
            position_contraction: POSITION_CONTRACTION.into(),
        },
    };
    scores.validate(model.graph())?;
    Ok(scores)
}

/// Parse a `source->destination<channel>`-free tab-separated row back into an edge index.
pub(crate) fn parse_edge(graph: &CompGraph, src: &str, dst: &str, ch: &str) -> Result<usize> {
    let source: NodeId = src.parse()?;
    let destination: NodeId = dst.parse()?;
    let channel: Channel = ch.parse()?;
    graph.require_edge(&crate::graph::EdgeId {
        source,
        destination,
        channel,
    })
}
