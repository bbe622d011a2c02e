// SPDX-License-Identifier: MIT OR Apache-2.0

//! Circuit drift while training on a new corpus, with optional replay.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::metrics::jaccard;
use crate::attribution::Circuit;
use crate::error::Result;
use crate::model::{Checkpoint, Model, Phase};
use crate::training::{train, TrainConfig, TrainJob};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgettingPoint {
    pub epoch: usize,
    pub replay_ratio: f64,
    pub jaccard_edges: f64,
    pub jaccard_nodes: f64,
}

pub fn edge_set(c: &Circuit) -> HashSet<usize> {
    c.edges.iter().copied().collect()
}

pub fn node_set(c: &Circuit) -> HashSet<String> {
    c.nodes.iter().map(|n| n.to_string()).collect()
}

/// Train `start` on `new_segments` (replaying `prior_segments` at `config.replay_ratio`),
/// rediscover the circuit after each epoch with `discover`, and compare it to `prior`.
///
/// Epoch 0 is `start` itself. `on_checkpoint` sees every checkpoint after discovery.
pub fn forgetting_analysis(
    start: &Model,
    config: &TrainConfig,
    new_segments: &[Vec<usize>],
    prior_segments: &[Vec<usize>],
    prior: &Circuit,
    mut discover: impl FnMut(&Model, usize) -> Result<Circuit>,
    mut on_checkpoint: impl FnMut(&Checkpoint, &Circuit) -> Result<()>,
) -> Result<Vec<ForgettingPoint>> {
    let pe = edge_set(prior);
    let pn = node_set(prior);
    let mut out = Vec::new();
    train(
        start,
        TrainJob {
            config,
            phase: Phase::Forgetting,
            segments: new_segments,
            prior: Some(prior_segments),
        },
        |ck| {
            let model = ck.model()?;
            let c = discover(&model, ck.epoch)?;
            out.push(ForgettingPoint {
                epoch: ck.epoch,
                replay_ratio: config.replay_ratio,
                jaccard_edges: jaccard(&edge_set(&c), &pe),
                jaccard_nodes: jaccard(&node_set(&c), &pn),
            });
            on_checkpoint(ck, &c)
        },
    )?;
    Ok(out)
}
