// SPDX-License-Identifier: MIT OR Apache-2.0

//! GPT-2-style decoder with per-head and per-MLP residual contributions.
//!
//! Pre-norm blocks: every destination owns its layer norm, so the residual
//! stream is a plain sum of node outputs and each graph edge is a linear
//! contribution in residual space. The attention output bias is shared
//! equally among the layer's heads so that the sum of contributions equals
//! the residual exactly.

mod checkpoint;
mod config;
mod forward;
mod params;

pub use checkpoint::{Checkpoint, OptimizerState, Phase, RngState, FORMAT_VERSION, MAGIC};
pub use config::ModelConfig;
pub use forward::{node_slot, rank_of, softmax, HookState, HookedRun, LogitRows, Patch};
pub use params::{layout, LayerSlots, Layout, Params};

use rand::Rng;

use crate::error::Result;
use crate::graph::CompGraph;

#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Params,
    layout: Layout,
    graph: CompGraph,
}

impl Model {
    pub fn init(config: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let params = Params::init(&config, rng);
        Self::from_params(config, params)
    }

    pub fn from_params(config: ModelConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let layout = layout(&config);
        let graph = CompGraph::build(config.n_layers, config.n_heads);
        Ok(Self {
            config,
            params,
            layout,
            graph,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }
}
