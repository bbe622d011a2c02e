// SPDX-License-Identifier: MIT OR Apache-2.0

//! Forward passes.
//!
//! [`Model::forward_tokens`] is the batched path used for training and plain
//! inference. [`Model::run_hooked`] decomposes every attention head and MLP
//! into its own residual-stream contribution, gives each read point (a head's
//! Q/K/V input, an MLP input, the logits input) its own tape value, and can
//! swap individual edges to corrupted-run contributions.

use std::collections::HashMap;

use super::Model;
use crate::autodiff::{softmax_in_place, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::{Channel, CompGraph, NodeId, ReadPoint};

/// Which positions the logits read-out covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogitRows {
    All,
    Last,
}

/// Edge-level ablation: edges outside the circuit carry the corrupted run's
/// source contribution instead of the running one.
#[derive(Clone, Copy)]
pub struct Patch<'a> {
    /// Membership flag per edge, in the graph's canonical order.
    pub in_circuit: &'a [bool],
    /// Node outputs of the corrupted run, indexed by graph node order.
    pub corrupted: &'a [Tensor],
}

/// Tape handles captured by [`Model::run_hooked`].
#[derive(Debug)]
pub struct HookedRun {
    /// `[rows, vocab]` where rows is `T` or `1` depending on [`LogitRows`].
    pub logits: Var,
    /// Residual contribution of each non-logits node, by graph node order.
    pub node_outputs: Vec<Var>,
    /// Value entering each read point, before the destination's layer norm.
    pub read_inputs: HashMap<ReadPoint, Var>,
    /// Attention pattern `[T, T]` of each head, index `layer * n_heads + head`.
    pub attn: Vec<Var>,
    /// Value vectors `[T, d_head]` of each head, same indexing as `attn`.
    pub values: Vec<Var>,
}

/// Materialized per-node contributions and read-point inputs of one forward pass.
#[derive(Clone, Debug)]
pub struct HookState {
    pub node_outputs: Vec<Tensor>,
    pub read_inputs: HashMap<ReadPoint, Tensor>,
}

impl HookedRun {
    pub fn state(&self, tape: &Tape) -> HookState {
        HookState {
            node_outputs: self.node_outputs.iter().map(|v| tape.value(*v).clone()).collect(),
            read_inputs: self
                .read_inputs
                .iter()
                .map(|(k, v)| (*k, tape.value(*v).clone()))
                .collect(),
        }
    }
}

fn causal_mask(t: usize) -> Tensor {
    let mut m = Tensor::zeros(&[t, t]);
    for i in 0..t {
        for j in i + 1..t {
            m.data_mut()[i * t + j] = f32::NEG_INFINITY;
        }
    }
    m
}

/// Position of a node in the graph's computation order.
pub fn node_slot(n_heads: usize, n_layers: usize, node: NodeId) -> usize {
    match node {
        NodeId::Input => 0,
        NodeId::Head { layer, head } => 1 + layer * (n_heads + 1) + head,
        NodeId::Mlp { layer } => 1 + layer * (n_heads + 1) + n_heads,
        NodeId::Logits => 1 + n_layers * (n_heads + 1),
    }
}

impl Model {
    fn check_tokens(&self, tokens: &[usize], seq: usize) -> Result<()> {
        let cfg = &self.config;
        if seq == 0 || seq > cfg.max_context {
            return Err(Error::Contract(format!(
                "sequence length {seq} outside 1..={}",
                cfg.max_context
            )));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= cfg.vocab_size) {
            return Err(Error::Contract(format!(
                "token id {bad} outside vocabulary of {}",
                cfg.vocab_size
            )));
        }
        Ok(())
    }

    fn unembed(&self, tape: &mut Tape, vars: &[Var], x: Var) -> Result<Var> {
        let lay = &self.layout;
        let w = match lay.w_u {
            Some(slot) => vars[slot],
            None => tape.permute(vars[lay.wte], &[1, 0])?,
        };
        let logits = tape.matmul(x, w)?;
        tape.add(logits, vars[lay.b_u])
    }

    /// Batched forward over `batch` sequences of length `seq` (row-major `tokens`).
    /// Returns logits `[batch * seq, vocab]`.
    pub fn forward_tokens(
        &self,
        tape: &mut Tape,
        vars: &[Var],
        tokens: &[usize],
        batch: usize,
        seq: usize,
    ) -> Result<Var> {
        if tokens.len() != batch * seq {
            return Err(Error::shape(
                "forward",
                format!("{} tokens for batch {batch} x seq {seq}", tokens.len()),
            ));
        }
        self.check_tokens(tokens, seq)?;
        let cfg = &self.config;
        let lay = &self.layout;
        let (d, h, dh) = (cfg.d_model, cfg.n_heads, cfg.d_head());
        let eps = cfg.layernorm_epsilon;

        let positions: Vec<usize> = (0..batch).flat_map(|_| 0..seq).collect();
        let tok = tape.embedding(vars[lay.wte], tokens)?;
        let pos = tape.embedding(vars[lay.wpe], &positions)?;
        let mut x = tape.add(tok, pos)?;
        let mask = tape.constant(causal_mask(seq));
        let inv_sqrt = 1.0 / (dh as f32).sqrt();

        for ls in &lay.layers {
            let hn = tape.layer_norm(x, vars[ls.ln1_g], vars[ls.ln1_b], eps)?;
            let qkv = tape.matmul(hn, vars[ls.w_qkv])?;
            let qkv = tape.add(qkv, vars[ls.b_qkv])?;
            let qkv = tape.reshape(qkv, &[batch, seq, 3, h, dh])?;
            let qkv = tape.permute(qkv, &[2, 0, 3, 1, 4])?;
            let mut parts = [qkv; 3];
            for (i, p) in parts.iter_mut().enumerate() {
                let s = tape.slice(qkv, 0, i, 1)?;
                *p = tape.reshape(s, &[batch * h, seq, dh])?;
            }
            let [q, k, v] = parts;
            let scores = tape.batch_matmul(q, k, true)?;
            let scores = tape.scale(scores, inv_sqrt);
            let scores = tape.add(scores, mask)?;
            let att = tape.softmax(scores);
            let z = tape.batch_matmul(att, v, false)?;
            let z = tape.reshape(z, &[batch, h, seq, dh])?;
            let z = tape.permute(z, &[0, 2, 1, 3])?;
            let z = tape.reshape(z, &[batch * seq, d])?;
            let o = tape.matmul(z, vars[ls.w_o])?;
            let o = tape.add(o, vars[ls.b_o])?;
            x = tape.add(x, o)?;

            let hn = tape.layer_norm(x, vars[ls.ln2_g], vars[ls.ln2_b], eps)?;
            let a = tape.matmul(hn, vars[ls.w_in])?;
            let a = tape.add(a, vars[ls.b_in])?;
            let a = tape.gelu(a);
            let m = tape.matmul(a, vars[ls.w_out])?;
            let m = tape.add(m, vars[ls.b_out])?;
            x = tape.add(x, m)?;
        }
        let xn = tape.layer_norm(x, vars[lay.lnf_g], vars[lay.lnf_b], eps)?;
        self.unembed(tape, vars, xn)
    }

    /// Logits `[seq, vocab]` of a single sequence, without gradients.
    pub fn logits(&self, tokens: &[usize]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape, false);
        let out = self.forward_tokens(&mut tape, &vars, tokens, 1, tokens.len())?;
        Ok(tape.value(out).clone())
    }

    /// Logits at the final position of a single sequence.
    pub fn last_logits(&self, tokens: &[usize]) -> Result<Vec<f32>> {
        let l = self.logits(tokens)?;
        Ok(l.row(l.rows() - 1).to_vec())
    }

    /// Input-node output: token plus learned position embedding, `[T, d_model]`.
    pub fn embed(&self, tokens: &[usize]) -> Result<Tensor> {
        self.check_tokens(tokens, tokens.len())?;
        let d = self.config.d_model;
        let wte = self.params.get(self.layout.wte).data();
        let wpe = self.params.get(self.layout.wpe).data();
        let mut out = Vec::with_capacity(tokens.len() * d);
        for (p, &t) in tokens.iter().enumerate() {
            out.extend(
                wte[t * d..(t + 1) * d]
                    .iter()
                    .zip(&wpe[p * d..(p + 1) * d])
                    .map(|(a, b)| a + b),
            );
        }
        Tensor::new(vec![tokens.len(), d], out)
    }

    /// Decomposed forward over one sequence.
    ///
    /// `embedding` replaces the input node's output (it must be `[T, d_model]`);
    /// otherwise it is computed from `tokens`. With a `patch`, every read point
    /// receives the corrupted contribution of each upstream node whose edge is
    /// outside the circuit, and the running contribution otherwise.
    pub fn run_hooked(
        &self,
        tape: &mut Tape,
        vars: &[Var],
        tokens: &[usize],
        embedding: Option<Var>,
        patch: Option<Patch<'_>>,
        rows: LogitRows,
    ) -> Result<HookedRun> {
        let seq = tokens.len();
        self.check_tokens(tokens, seq)?;
        let cfg = &self.config;
        let lay = &self.layout;
        let graph = &self.graph;
        let (d, nh, dh) = (cfg.d_model, cfg.n_heads, cfg.d_head());
        let eps = cfg.layernorm_epsilon;
        if let Some(p) = &patch {
            if p.in_circuit.len() != graph.n_edges() {
                return Err(Error::Contract(format!(
                    "circuit mask has {} entries, graph has {} edges",
                    p.in_circuit.len(),
                    graph.n_edges()
                )));
            }
            if p.corrupted.len() != graph.nodes().len() - 1 {
                return Err(Error::Contract(format!(
                    "corrupted cache has {} node outputs, expected {}",
                    p.corrupted.len(),
                    graph.nodes().len() - 1
                )));
            }
        }

        let input = match embedding {
            Some(e) => {
                if tape.shape(e) != [seq, d] {
                    return Err(Error::shape(
                        "run_hooked",
                        format!("embedding {:?} does not match [{seq}, {d}]", tape.shape(e)),
                    ));
                }
                e
            }
            None => {
                let positions: Vec<usize> = (0..seq).collect();
                let tok = tape.embedding(vars[lay.wte], tokens)?;
                let pos = tape.embedding(vars[lay.wpe], &positions)?;
                tape.add(tok, pos)?
            }
        };

        let mut node_outputs = vec![input];
        let mut read_inputs = HashMap::new();
        let mut residual = input;
        let mask = tape.constant(causal_mask(seq));
        let inv_sqrt = 1.0 / (dh as f32).sqrt();
        let inv_heads = 1.0 / nh as f32;
        let mut attn = Vec::with_capacity(cfg.n_layers * nh);
        let mut values = Vec::with_capacity(cfg.n_layers * nh);

        let read = |tape: &mut Tape,
                    residual: Var,
                    outputs: &[Var],
                    node: NodeId,
                    channel: Channel|
         -> Result<Var> {
            if let Some(p) = patch.as_ref().filter(|_| !tape.requires_grad(residual)) {
                // No gradient to route: fold the swaps into one constant, same arithmetic order.
                let mut x = tape.value(residual).clone();
                for &e in graph.incoming(node, channel) {
                    if p.in_circuit[e] {
                        continue;
                    }
                    let src = node_slot(nh, cfg.n_layers, graph.edge(e).source);
                    let clean = tape.value(outputs[src]).data();
                    for ((v, o), c) in x.data_mut().iter_mut().zip(clean).zip(p.corrupted[src].data()) {
                        *v = *v - *o + *c;
                    }
                }
                return Ok(tape.constant(x));
            }
            let mut x = tape.identity(residual);
            if let Some(p) = &patch {
                for &e in graph.incoming(node, channel) {
                    if p.in_circuit[e] {
                        continue;
                    }
                    let src = node_slot(nh, cfg.n_layers, graph.edge(e).source);
                    let corrupted = tape.constant(p.corrupted[src].clone());
                    x = tape.sub(x, outputs[src])?;
                    x = tape.add(x, corrupted)?;
                }
            }
            tape.retain_grad(x);
            Ok(x)
        };

        for (layer, ls) in lay.layers.iter().enumerate() {
            let mut contributions = Vec::with_capacity(nh);
            for head in 0..nh {
                let node = NodeId::Head { layer, head };
                let mut proj = [input; 3];
                for channel in Channel::QKV {
                    let c = channel.qkv_index().expect("qkv channel");
                    let r = read(tape, residual, &node_outputs, node, channel)?;
                    read_inputs.insert(ReadPoint { node, channel }, r);
                    let hn = tape.layer_norm(r, vars[ls.ln1_g], vars[ls.ln1_b], eps)?;
                    let col = c * d + head * dh;
                    let w = tape.slice(vars[ls.w_qkv], 1, col, dh)?;
                    let b = tape.slice(vars[ls.b_qkv], 0, col, dh)?;
                    let p = tape.matmul(hn, w)?;
                    let p = tape.add(p, b)?;
                    proj[c] = tape.reshape(p, &[1, seq, dh])?;
                }
                let [q, k, v] = proj;
                let scores = tape.batch_matmul(q, k, true)?;
                let scores = tape.scale(scores, inv_sqrt);
                let scores = tape.add(scores, mask)?;
                let att = tape.softmax(scores);
                let z = tape.batch_matmul(att, v, false)?;
                let z = tape.reshape(z, &[seq, dh])?;
                let w_o = tape.slice(vars[ls.w_o], 0, head * dh, dh)?;
                let out = tape.matmul(z, w_o)?;
                let bias = tape.scale(vars[ls.b_o], inv_heads);
                let out = tape.add(out, bias)?;
                attn.push(tape.reshape(att, &[seq, seq])?);
                values.push(tape.reshape(v, &[seq, dh])?);
                contributions.push(out);
            }
            // Heads of one layer all read the residual before any of them writes.
            for out in contributions {
                node_outputs.push(out);
                residual = tape.add(residual, out)?;
            }

            let node = NodeId::Mlp { layer };
            let r = read(tape, residual, &node_outputs, node, Channel::In)?;
            read_inputs.insert(
                ReadPoint {
                    node,
                    channel: Channel::In,
                },
                r,
            );
            let hn = tape.layer_norm(r, vars[ls.ln2_g], vars[ls.ln2_b], eps)?;
            let a = tape.matmul(hn, vars[ls.w_in])?;
            let a = tape.add(a, vars[ls.b_in])?;
            let a = tape.gelu(a);
            let m = tape.matmul(a, vars[ls.w_out])?;
            let m = tape.add(m, vars[ls.b_out])?;
            node_outputs.push(m);
            residual = tape.add(residual, m)?;
        }

        let r = read(tape, residual, &node_outputs, NodeId::Logits, Channel::In)?;
        read_inputs.insert(
            ReadPoint {
                node: NodeId::Logits,
                channel: Channel::In,
            },
            r,
        );
        let r = match rows {
            LogitRows::All => r,
            LogitRows::Last => tape.select_rows(r, &[seq - 1])?,
        };
        let xn = tape.layer_norm(r, vars[lay.lnf_g], vars[lay.lnf_b], eps)?;
        let logits = self.unembed(tape, vars, xn)?;
        Ok(HookedRun {
            logits,
            node_outputs,
            read_inputs,
            attn,
            values,
        })
    }

    /// Cached forward: logits at every position plus the complete hook state.
    pub fn run_with_cache(&self, tokens: &[usize]) -> Result<(Tensor, HookState)> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape, false);
        let run = self.run_hooked(&mut tape, &vars, tokens, None, None, LogitRows::All)?;
        Ok((tape.value(run.logits).clone(), run.state(&tape)))
    }

    /// Patched forward where edges outside `in_circuit` carry `corrupted` contributions.
    pub fn run_patched(
        &self,
        tokens: &[usize],
        in_circuit: &[bool],
        corrupted: &[Tensor],
        rows: LogitRows,
    ) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape, false);
        let patch = Patch {
            in_circuit,
            corrupted,
        };
        let run = self.run_hooked(&mut tape, &vars, tokens, None, Some(patch), rows)?;
        Ok(tape.value(run.logits).clone())
    }

    /// Map a residual-stream vector to vocabulary logits.
    pub fn unembed_residual(&self, residual: &[f32], apply_final_norm: bool) -> Result<Vec<f32>> {
        let cfg = &self.config;
        let d = cfg.d_model;
        if residual.len() != d {
            return Err(Error::shape(
                "unembed_residual",
                format!("residual has {} values, d_model is {d}", residual.len()),
            ));
        }
        let x: Vec<f32> = if apply_final_norm {
            let g = self.params.get(self.layout.lnf_g).data();
            let b = self.params.get(self.layout.lnf_b).data();
            let mean = residual.iter().sum::<f32>() / d as f32;
            let var = residual.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / d as f32;
            let rs = 1.0 / (var + cfg.layernorm_epsilon).sqrt();
            (0..d).map(|j| (residual[j] - mean) * rs * g[j] + b[j]).collect()
        } else {
            residual.to_vec()
        };
        let v = cfg.vocab_size;
        let mut out = self.params.get(self.layout.b_u).data().to_vec();
        match self.layout.w_u {
            Some(slot) => {
                crate::autodiff::gemm(1, d, v, &x, false, self.params.get(slot).data(), false, &mut out, true)
            }
            None => crate::autodiff::gemm(
                1,
                d,
                v,
                &x,
                false,
                self.params.get(self.layout.wte).data(),
                true,
                &mut out,
                true,
            ),
        }
        Ok(out)
    }

    /// The graph this model's hooks are organized by.
    pub fn graph(&self) -> &CompGraph {
        &self.graph
    }
}

/// Softmax probabilities of a logit vector.
pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let mut p = logits.to_vec();
    softmax_in_place(&mut p);
    p
}

/// 1-based rank of `target` (1 = highest logit; ties resolved in the target's favour).
pub fn rank_of(logits: &[f32], target: usize) -> usize {
    let t = logits[target];
    1 + logits.iter().filter(|&&v| v > t).count()
}
