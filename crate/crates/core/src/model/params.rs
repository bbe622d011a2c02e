// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::ModelConfig;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Positions of one block's parameters in [`Params`].
#[derive(Clone, Debug)]
pub struct LayerSlots {
    pub ln1_g: usize,
    pub ln1_b: usize,
    /// `[d_model, 3 * d_model]`, columns ordered `[Q | K | V]`, head-major inside each.
    pub w_qkv: usize,
    pub b_qkv: usize,
    /// `[d_model, d_model]`; rows `h * d_head .. (h + 1) * d_head` belong to head `h`.
    pub w_o: usize,
    pub b_o: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
    pub w_in: usize,
    pub b_in: usize,
    pub w_out: usize,
    pub b_out: usize,
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub wte: usize,
    pub wpe: usize,
    pub layers: Vec<LayerSlots>,
    pub lnf_g: usize,
    pub lnf_b: usize,
    /// `None` when the unembedding is tied to `wte`.
    pub w_u: Option<usize>,
    pub b_u: usize,
}

/// Named parameter tensors of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

struct Builder {
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
}

impl Builder {
    fn add(&mut self, name: String, shape: Vec<usize>) -> usize {
        self.names.push(name);
        self.shapes.push(shape);
        self.names.len() - 1
    }
}

fn plan(cfg: &ModelConfig) -> (Layout, Builder) {
    let (d, m, v) = (cfg.d_model, cfg.d_mlp, cfg.vocab_size);
    let mut b = Builder {
        names: Vec::new(),
        shapes: Vec::new(),
    };
    let wte = b.add("wte".into(), vec![v, d]);
    let wpe = b.add("wpe".into(), vec![cfg.max_context, d]);
    let layers = (0..cfg.n_layers)
        .map(|l| LayerSlots {
            ln1_g: b.add(format!("h{l}.ln1.g"), vec![d]),
            ln1_b: b.add(format!("h{l}.ln1.b"), vec![d]),
            w_qkv: b.add(format!("h{l}.attn.w_qkv"), vec![d, 3 * d]),
            b_qkv: b.add(format!("h{l}.attn.b_qkv"), vec![3 * d]),
            w_o: b.add(format!("h{l}.attn.w_o"), vec![d, d]),
            b_o: b.add(format!("h{l}.attn.b_o"), vec![d]),
            ln2_g: b.add(format!("h{l}.ln2.g"), vec![d]),
            ln2_b: b.add(format!("h{l}.ln2.b"), vec![d]),
            w_in: b.add(format!("h{l}.mlp.w_in"), vec![d, m]),
            b_in: b.add(format!("h{l}.mlp.b_in"), vec![m]),
            w_out: b.add(format!("h{l}.mlp.w_out"), vec![m, d]),
            b_out: b.add(format!("h{l}.mlp.b_out"), vec![d]),
        })
        .collect();
    let lnf_g = b.add("ln_f.g".into(), vec![d]);
    let lnf_b = b.add("ln_f.b".into(), vec![d]);
    let w_u = (!cfg.tie_unembedding).then(|| b.add("unembed.w".into(), vec![d, v]));
    let b_u = b.add("unembed.b".into(), vec![v]);
    (
        Layout {
            wte,
            wpe,
            layers,
            lnf_g,
            lnf_b,
            w_u,
            b_u,
        },
        b,
    )
}

pub fn layout(cfg: &ModelConfig) -> Layout {
    plan(cfg).0
}

fn is_gain(name: &str) -> bool {
    name.ends_with(".g")
}

fn is_bias(name: &str) -> bool {
    name.ends_with(".b") || name.contains(".b_")
}

impl Params {
    /// GPT-2 initialization: N(0, 0.02) weights, residual-output projections
    /// scaled by `1 / sqrt(2 * n_layers)`, zero biases, unit gains.
    pub fn init(cfg: &ModelConfig, rng: &mut impl Rng) -> Self {
        let (_, b) = plan(cfg);
        let std = 0.02f32;
        let resid_std = std / (2.0 * cfg.n_layers as f32).sqrt();
        let mut tensors = Vec::with_capacity(b.names.len());
        for (name, shape) in b.names.iter().zip(&b.shapes) {
            let t = if is_gain(name) {
                Tensor::full(shape, 1.0)
            } else if is_bias(name) {
                Tensor::zeros(shape)
            } else {
                let s = if name.ends_with("attn.w_o") || name.ends_with("mlp.w_out") {
                    resid_std
                } else {
                    std
                };
                let normal = Normal::new(0.0, s).expect("positive std");
                let n: usize = shape.iter().product();
                Tensor::new(shape.clone(), (0..n).map(|_| normal.sample(rng)).collect())
                    .expect("planned shape")
            };
            tensors.push(t);
        }
        Self {
            names: b.names,
            tensors,
        }
    }

    /// Rebuild from a named table, checking every planned tensor is present with the right shape.
    pub fn from_named(cfg: &ModelConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        let (_, b) = plan(cfg);
        if named.len() != b.names.len() {
            return Err(Error::format(
                "parameters",
                format!("expected {} tensors, found {}", b.names.len(), named.len()),
            ));
        }
        let mut tensors = Vec::with_capacity(named.len());
        for ((want_name, want_shape), (name, t)) in b.names.iter().zip(&b.shapes).zip(named) {
            if *want_name != name || t.shape() != want_shape.as_slice() {
                return Err(Error::format(
                    "parameters",
                    format!("expected {want_name} {:?}, found {name} {:?}", want_shape, t.shape()),
                ));
            }
            tensors.push(t);
        }
        Ok(Self {
            names: b.names,
            tensors,
        })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, slot: usize) -> &Tensor {
        &self.tensors[slot]
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Whether decoupled weight decay applies (matrices and embeddings, not biases or gains).
    pub fn decays(&self, slot: usize) -> bool {
        let n = &self.names[slot];
        !is_gain(n) && !is_bias(n)
    }

    /// Push every parameter onto the tape as a leaf.
    pub fn bind(&self, tape: &mut Tape, requires_grad: bool) -> Vec<Var> {
        self.tensors
            .iter()
            .map(|t| tape.leaf(t.clone(), requires_grad))
            .collect()
    }
}
