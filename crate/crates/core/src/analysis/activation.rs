// SPDX-License-Identifier: MIT OR Apache-2.0

//! Share of each layer's outgoing edges that a circuit keeps.

use serde::{Deserialize, Serialize};

use crate::attribution::Circuit;
use crate::error::Result;
use crate::graph::{layer_of, CompGraph, LayerIndex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationRatios {
    /// Edges leaving the input node.
    pub input: f64,
    /// Layers `0..n_layers - 1`; the last layer is left out.
    pub layers: Vec<f64>,
}

pub fn edge_activation_ratio(circuit: &Circuit, graph: &CompGraph) -> Result<ActivationRatios> {
    let mask = circuit.mask(graph)?;
    let nl = graph.n_layers();
    let mut kept = vec![0usize; nl + 1];
    let mut total = vec![0usize; nl + 1];
    for (e, id) in graph.edges().iter().enumerate() {
        let row = match layer_of(id.source) {
            LayerIndex::Input => 0,
            LayerIndex::Block(l) => l + 1,
            LayerIndex::Logits => unreachable!("logits has no outgoing edges"),
        };
        total[row] += 1;
        kept[row] += mask[e] as usize;
    }
    let ratio = |i: usize| kept[i] as f64 / total[i] as f64;
    Ok(ActivationRatios {
        input: ratio(0),
        layers: (1..nl).map(ratio).collect(),
    })
}
