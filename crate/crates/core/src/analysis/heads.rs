// SPDX-License-Identifier: MIT OR Apache-2.0

//! Attention-head taxonomy by direct logit attribution from source-token groups.
//!
//! A head's output at the last position is `Σ_p a_p v_p W_O`. Summing that over
//! the subject span and over the relation span, and projecting each sum onto
//! the target token's logit, gives `DLA_s` and `DLA_r`. The final layer norm is
//! linearized around the clean run: centering plus the run's own `1 / σ`.

use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::corpus::TaskExample;
use crate::error::{Error, Result};
use crate::graph::{Channel, NodeId, ReadPoint};
use crate::model::{LogitRows, Model};

pub const DEFAULT_TAU: f64 = 10.0;
/// Recorded with head tables; see the module docs.
pub const DLA_PROJECTION: &str = "target-logit";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Mover,
    Relation,
    Mixture,
}

impl HeadKind {
    pub const ALL: [HeadKind; 3] = [HeadKind::Mover, HeadKind::Relation, HeadKind::Mixture];

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::Mover => "mover",
            HeadKind::Relation => "relation",
            HeadKind::Mixture => "mixture",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadClass {
    pub head: NodeId,
    pub dla_subject: f64,
    pub dla_relation: f64,
    /// `|dla_subject / dla_relation|`, infinite when the denominator is 0.
    pub ratio: f64,
    pub class: HeadKind,
    /// The ratio was undefined or infinite.
    pub degenerate: bool,
}

/// `ratio > tau` is a mover head, `ratio < 1 / tau` a relation head.
pub fn classify_ratio(ratio: f64, tau: f64) -> HeadKind {
    if ratio > tau {
        HeadKind::Mover
    } else if ratio < 1.0 / tau {
        HeadKind::Relation
    } else {
        HeadKind::Mixture
    }
}

/// Class from summed DLA values.
pub fn classify_dla(head: NodeId, dla_subject: f64, dla_relation: f64, tau: f64) -> HeadClass {
    let (ratio, class, degenerate) = if dla_relation == 0.0 {
        if dla_subject == 0.0 {
            (f64::NAN, HeadKind::Mixture, true)
        } else {
            (f64::INFINITY, HeadKind::Mover, true)
        }
    } else {
        let r = (dla_subject / dla_relation).abs();
        (r, classify_ratio(r, tau), false)
    };
    HeadClass {
        head,
        dla_subject,
        dla_relation,
        ratio,
        class,
        degenerate,
    }
}

/// Per-head `(DLA_s, DLA_r)` of one example, index `layer * n_heads + head`.
pub fn example_dla(model: &Model, ex: &TaskExample) -> Result<Vec<(f64, f64)>> {
    let cfg = &model.config;
    let lay = model.layout();
    let (d, nh, dh) = (cfg.d_model, cfg.n_heads, cfg.d_head());
    let seq = ex.clean.len();
    if ex.subject_span.end > seq || ex.relation_span.end > seq {
        return Err(Error::Contract(format!("token spans out of range for {}", ex.subject)));
    }
    if ex.target >= cfg.vocab_size {
        return Err(Error::Contract(format!("target id {} outside vocabulary", ex.target)));
    }
    let mut tape = Tape::new();
    let vars = model.params.bind(&mut tape, false);
    let run = model.run_hooked(&mut tape, &vars, &ex.clean, None, None, LogitRows::Last)?;
    let resid = tape.value(
        run.read_inputs[&ReadPoint {
            node: NodeId::Logits,
            channel: Channel::In,
        }],
    );
    let last = resid.row(seq - 1);
    let mean = last.iter().sum::<f32>() as f64 / d as f64;
    let var = last.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / d as f64;
    let inv_sigma = 1.0 / (var + cfg.layernorm_epsilon as f64).sqrt();

    let g = model.params.get(lay.lnf_g).data();
    let unembed_col: Vec<f64> = match lay.w_u {
        Some(slot) => {
            let w = model.params.get(slot).data();
            (0..d).map(|j| w[j * cfg.vocab_size + ex.target] as f64).collect()
        }
        None => {
            let w = model.params.get(lay.wte).data();
            w[ex.target * d..(ex.target + 1) * d].iter().map(|&v| v as f64).collect()
        }
    };
    let mut dir: Vec<f64> = (0..d).map(|j| g[j] as f64 * unembed_col[j] * inv_sigma).collect();
    let dm = dir.iter().sum::<f64>() / d as f64;
    dir.iter_mut().for_each(|v| *v -= dm);

    let mut out = Vec::with_capacity(cfg.n_layers * nh);
    for (layer, ls) in lay.layers.iter().enumerate() {
        let w_o = model.params.get(ls.w_o).data();
        for head in 0..nh {
            // W_O rows of this head projected onto the direction: [d_head].
            let r: Vec<f64> = (0..dh)
                .map(|i| {
                    let row = &w_o[(head * dh + i) * d..(head * dh + i + 1) * d];
                    row.iter().zip(&dir).map(|(&w, &u)| w as f64 * u).sum()
                })
                .collect();
            let idx = layer * nh + head;
            let att = tape.value(run.attn[idx]);
            let att = att.row(seq - 1);
            let v = tape.value(run.values[idx]);
            let pos = |p: usize| -> f64 {
                let vp = v.row(p);
                att[p] as f64 * vp.iter().zip(&r).map(|(&a, &b)| a as f64 * b).sum::<f64>()
            };
            let s: f64 = ex.subject_span.clone().map(pos).sum();
            let rel: f64 = ex.relation_span.clone().map(pos).sum();
            out.push((s, rel));
        }
    }
    Ok(out)
}

/// Classify every head from DLA summed over `examples`.
pub fn classify_heads(model: &Model, examples: &[TaskExample], tau: f64) -> Result<Vec<HeadClass>> {
    if !(tau > 1.0) {
        return Err(Error::Config(format!("head threshold tau must exceed 1, got {tau}")));
    }
    let nh = model.config.n_heads;
    let mut sums = vec![(0.0f64, 0.0f64); model.config.n_layers * nh];
    for ex in examples {
        for (acc, (s, r)) in sums.iter_mut().zip(example_dla(model, ex)?) {
            acc.0 += s;
            acc.1 += r;
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, (s, r))| {
            classify_dla(
                NodeId::Head {
                    layer: i / nh,
                    head: i % nh,
                },
                s,
                r,
                tau,
            )
        })
        .collect())
}

/// `[mover, relation, mixture]` counts per layer.
pub fn head_counts(classes: &[HeadClass], n_layers: usize) -> Vec<[usize; 3]> {
    let mut out = vec![[0; 3]; n_layers];
    for c in classes {
        if let NodeId::Head { layer, .. } = c.head {
            let k = HeadKind::ALL.iter().position(|&k| k == c.class).expect("kind");
            out[layer][k] += 1;
        }
    }
    out
}
