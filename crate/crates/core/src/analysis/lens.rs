// SPDX-License-Identifier: MIT OR Apache-2.0

//! Logit lens: the target token's rank and probability at each layer boundary.

use serde::{Deserialize, Serialize};

use crate::corpus::TaskExample;
use crate::error::{Error, Result};
use crate::model::{rank_of, softmax, Model};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LensPoint {
    /// Boundary index: 0 is the embedding, `l + 1` follows layer `l`.
    pub layer: usize,
    pub median_rank: f64,
    pub mean_probability: f64,
}

/// Last-position residual at every boundary, `n_layers + 1` vectors.
pub fn boundary_residuals(model: &Model, tokens: &[usize]) -> Result<Vec<Vec<f32>>> {
    let (_, state) = model.run_with_cache(tokens)?;
    let nh = model.config.n_heads;
    let d = model.config.d_model;
    let last = tokens.len() - 1;
    let mut acc = state.node_outputs[0].row(last).to_vec();
    let mut out = vec![acc.clone()];
    for layer in 0..model.config.n_layers {
        for k in 0..=nh {
            let row = state.node_outputs[1 + layer * (nh + 1) + k].row(last);
            for j in 0..d {
                acc[j] += row[j];
            }
        }
        out.push(acc.clone());
    }
    Ok(out)
}

/// `(rank, probability)` of each example's target at each boundary: `[example][boundary]`.
pub fn lens_table(model: &Model, examples: &[TaskExample], apply_final_norm: bool) -> Result<Vec<Vec<(usize, f64)>>> {
    examples
        .iter()
        .map(|ex| {
            boundary_residuals(model, &ex.clean)?
                .iter()
                .map(|r| {
                    let logits = model.unembed_residual(r, apply_final_norm)?;
                    Ok((rank_of(&logits, ex.target), softmax(&logits)[ex.target] as f64))
                })
                .collect()
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Median rank and mean probability per boundary.
pub fn logit_lens_trace(model: &Model, examples: &[TaskExample], apply_final_norm: bool) -> Result<Vec<LensPoint>> {
    if examples.is_empty() {
        return Err(Error::Contract("logit lens needs at least one example".into()));
    }
    let table = lens_table(model, examples, apply_final_norm)?;
    Ok((0..=model.config.n_layers)
        .map(|b| {
            let mut ranks: Vec<f64> = table.iter().map(|row| row[b].0 as f64).collect();
            let mean_probability = table.iter().map(|row| row[b].1).sum::<f64>() / table.len() as f64;
            LensPoint {
                layer: b,
                median_rank: median(&mut ranks),
                mean_probability,
            }
        })
        .collect())
}
