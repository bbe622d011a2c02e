// SPDX-License-Identifier: MIT OR Apache-2.0

//! Standalone circuit performance: out-of-circuit edges carry corrupted contributions.

use rayon::prelude::*;

use super::circuit::Circuit;
use super::eap_ig::with_pool;
use crate::analysis::hit_at_10;
use crate::autodiff::Tensor;
use crate::corpus::TaskExample;
use crate::error::{Error, Result};
use crate::model::{rank_of, LogitRows, Model};

/// Test examples with their corrupted-run node outputs cached for one checkpoint.
pub struct PreparedSet<'a> {
    pub examples: &'a [TaskExample],
    corrupted: Vec<Vec<Tensor>>,
    whole: Vec<usize>,
    n_layers: usize,
    n_heads: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitEval {
    pub hit_at_10: f64,
    /// Rank of each example's target first token.
    pub ranks: Vec<usize>,
}

impl<'a> PreparedSet<'a> {
    pub fn new(model: &Model, examples: &'a [TaskExample], jobs: usize) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Contract("circuit evaluation needs a nonempty test set".into()));
        }
        let cached: Vec<Result<(Vec<Tensor>, usize)>> = with_pool(jobs, || {
            examples
                .par_iter()
                .map(|ex| {
                    let (_, c) = model.run_with_cache(&ex.corrupted)?;
                    let clean = model.last_logits(&ex.clean)?;
                    Ok((c.node_outputs, rank_of(&clean, ex.target)))
                })
                .collect()
        })?;
        let (corrupted, whole) = cached.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
        Ok(Self {
            examples,
            corrupted,
            whole,
            n_layers: model.config.n_layers,
            n_heads: model.config.n_heads,
        })
    }

    /// Whole-model ranks, computed without patching.
    pub fn whole_model(&self) -> Result<CircuitEval> {
        Ok(CircuitEval {
            hit_at_10: hit_at_10(&self.whole)?,
            ranks: self.whole.clone(),
        })
    }

    fn check(&self, model: &Model) -> Result<()> {
        if model.config.n_layers != self.n_layers || model.config.n_heads != self.n_heads {
            return Err(Error::Config("prepared test set belongs to a different model shape".into()));
        }
        Ok(())
    }
}

/// Evaluate `circuit` (possibly discovered on another checkpoint) with `model`'s weights.
pub fn evaluate_circuit(model: &Model, circuit: &Circuit, set: &PreparedSet<'_>, jobs: usize) -> Result<CircuitEval> {
    set.check(model)?;
    let mask = circuit.mask(model.graph())?;
    evaluate_mask(model, &mask, set, jobs)
}

pub fn evaluate_mask(model: &Model, mask: &[bool], set: &PreparedSet<'_>, jobs: usize) -> Result<CircuitEval> {
    set.check(model)?;
    let ranks: Vec<Result<usize>> = with_pool(jobs, || {
        set.examples
            .par_iter()
            .zip(&set.corrupted)
            .map(|(ex, corrupted)| {
                let l = model.run_patched(&ex.clean, mask, corrupted, LogitRows::Last)?;
                Ok(rank_of(l.data(), ex.target))
            })
            .collect()
    })?;
    let ranks = ranks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CircuitEval {
        hit_at_10: hit_at_10(&ranks)?,
        ranks,
    })
}
