// SPDX-License-Identifier: MIT OR Apache-2.0

//! Next-token training with per-epoch checkpoints.

mod blocks;
mod optim;

pub use blocks::{pack_blocks, segment_stream, Block};
pub use optim::{clip_grad_norm, global_norm, AdamW};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, Model, OptimizerState, Phase, RngState};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Constant; no warmup or decay.
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Micro-batches per optimizer step.
    pub grad_accum: usize,
    /// Blocks per micro-batch.
    pub batch_size: usize,
    pub block_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of each epoch's blocks drawn from the prior corpus.
    pub replay_ratio: f64,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.95,
            eps: 1e-6,
            weight_decay: 0.1,
            grad_accum: 4,
            batch_size: 8,
            block_size: 128,
            epochs: 20,
            seed: 0,
            replay_ratio: 0.0,
            grad_clip: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, max_context: usize) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("eps", self.eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("train.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("train.{name} must be in [0, 1), got {v}")));
            }
        }
        if !(self.weight_decay >= 0.0) || !(self.grad_clip >= 0.0) {
            return Err(Error::Config("train.weight_decay and train.grad_clip must be non-negative".into()));
        }
        if self.grad_accum == 0 || self.batch_size == 0 || self.block_size == 0 {
            return Err(Error::Config(
                "train.grad_accum, batch_size and block_size must be positive".into(),
            ));
        }
        if self.block_size > max_context {
            return Err(Error::Config(format!(
                "train.block_size {} exceeds the model context of {max_context}",
                self.block_size
            )));
        }
        if !(0.0..=1.0).contains(&self.replay_ratio) {
            return Err(Error::Config(format!(
                "train.replay_ratio must be in [0, 1], got {}",
                self.replay_ratio
            )));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamW {
        AdamW {
            lr: self.learning_rate as f32,
            beta1: self.beta1 as f32,
            beta2: self.beta2 as f32,
            eps: self.eps as f32,
            weight_decay: self.weight_decay as f32,
        }
    }
}

/// Mean loss of one optimizer step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: u64,
    pub loss: f32,
}

/// Blocks for one epoch: shuffled segments packed into blocks, with
/// `round(replay_ratio * n)` of the `n` new-corpus blocks replaced by blocks
/// packed from the shuffled prior corpus. Returns the blocks and the replay count.
pub fn epoch_blocks(
    segments: &[Vec<usize>],
    prior: Option<&[Vec<usize>]>,
    block_size: usize,
    replay_ratio: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Block>, usize)> {
    let shuffled = |segs: &[Vec<usize>], rng: &mut ChaCha8Rng| {
        let mut order: Vec<usize> = (0..segs.len()).collect();
        order.shuffle(rng);
        pack_blocks(&segment_stream(order.iter().map(|&i| &segs[i][..])), block_size)
    };
    let mut blocks = shuffled(segments, rng);
    let n = blocks.len();
    let n_replay = (replay_ratio * n as f64).round() as usize;
    if n_replay > 0 {
        let prior = prior
            .filter(|p| !p.is_empty())
            .ok_or_else(|| Error::Config("replay_ratio > 0 needs a prior corpus".into()))?;
        let prior_blocks = shuffled(prior, rng);
        blocks.truncate(n - n_replay);
        blocks.extend(prior_blocks.iter().cycle().take(n_replay).cloned());
        blocks.shuffle(rng);
    }
    Ok((blocks, n_replay))
}

/// What to train on.
pub struct TrainJob<'a> {
    pub config: &'a TrainConfig,
    pub phase: Phase,
    /// Tokenized segments of the stage corpus.
    pub segments: &'a [Vec<usize>],
    /// Tokenized segments of the previous stage, for replay.
    pub prior: Option<&'a [Vec<usize>]>,
}

/// Train `start` for `config.epochs` epochs.
///
/// `on_checkpoint` receives the initial state as epoch 0 and then the state at
/// the end of every epoch. Optimizer moments start from zero for each stage.
/// A non-finite loss aborts with [`Error::Numerical`] after the last good
/// checkpoint has been handed out.
pub fn train(
    start: &Model,
    job: TrainJob<'_>,
    mut on_checkpoint: impl FnMut(&Checkpoint) -> Result<()>,
) -> Result<Vec<LossRecord>> {
    let cfg = job.config;
    cfg.validate(start.config.max_context)?;
    if job.segments.is_empty() {
        return Err(Error::Config("training corpus is empty".into()));
    }
    let mut rng = rng::stream(cfg.seed, &format!("train/{}", job.phase));
    let mut model = start.clone();
    let mut opt = OptimizerState::zeros_like(&model.params);
    let adam = cfg.optimizer();
    let snapshot = |model: &Model, opt: &OptimizerState, epoch: usize, rng: &ChaCha8Rng| Checkpoint {
        config: model.config.clone(),
        params: model.params.clone(),
        optimizer: opt.clone(),
        epoch,
        phase: job.phase,
        rng: RngState::capture(rng),
    };
    on_checkpoint(&snapshot(&model, &opt, 0, &rng))?;

    let mut losses = Vec::new();
    for epoch in 1..=cfg.epochs {
        let (blocks, _) = epoch_blocks(job.segments, job.prior, cfg.block_size, cfg.replay_ratio, &mut rng)?;
        let micro: Vec<&[Block]> = blocks.chunks(cfg.batch_size).collect();
        for group in micro.chunks(cfg.grad_accum) {
            let mut grads: Vec<Tensor> = model.params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
            let mut loss_sum = 0.0f64;
            let mut used = 0usize;
            for batch in group {
                let Some((loss, g)) = micro_step(&model, batch, cfg.block_size)? else {
                    continue;
                };
                if !loss.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite training loss in {} epoch {epoch} at step {}",
                        job.phase,
                        opt.step + 1
                    )));
                }
                for (acc, gi) in grads.iter_mut().zip(&g) {
                    acc.add_assign(gi)?;
                }
                loss_sum += loss as f64;
                used += 1;
            }
            if used == 0 {
                continue;
            }
            let scale = 1.0 / used as f32;
            for g in grads.iter_mut() {
                g.data_mut().iter_mut().for_each(|v| *v *= scale);
            }
            if cfg.grad_clip > 0.0 {
                let norm = clip_grad_norm(&mut grads, cfg.grad_clip as f32);
                if !norm.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite gradient norm in {} epoch {epoch}",
                        job.phase
                    )));
                }
            }
            adam.step(&mut model.params, &grads, &mut opt);
            losses.push(LossRecord {
                epoch,
                step: opt.step,
                loss: (loss_sum / used as f64) as f32,
            });
        }
        if !model.params.tensors().iter().all(Tensor::all_finite) {
            return Err(Error::Numerical(format!("parameters diverged in {} epoch {epoch}", job.phase)));
        }
        log::info!(
            "{} epoch {epoch}/{}: last loss {:.4}",
            job.phase,
            cfg.epochs,
            losses.last().map(|l| l.loss).unwrap_or(f32::NAN)
        );
        on_checkpoint(&snapshot(&model, &opt, epoch, &rng))?;
    }
    Ok(losses)
}

/// Loss and parameter gradients of one micro-batch; `None` when it has no labels.
fn micro_step(model: &Model, batch: &[Block], block_size: usize) -> Result<Option<(f32, Vec<Tensor>)>> {
    let labels: Vec<Option<usize>> = batch.iter().flat_map(|b| b.labels.iter().copied()).collect();
    if labels.iter().all(Option::is_none) {
        return Ok(None);
    }
    let tokens: Vec<usize> = batch.iter().flat_map(|b| b.tokens.iter().copied()).collect();
    let mut tape = Tape::new();
    let vars = model.params.bind(&mut tape, true);
    let logits = model.forward_tokens(&mut tape, &vars, &tokens, batch.len(), block_size)?;
    let loss = tape.cross_entropy(logits, &labels)?;
    let value = tape.value(loss).item()?;
    tape.backward(loss)?;
    let grads = vars
        .iter()
        .map(|&v| {
            tape.take_grad(v)
                .ok_or_else(|| Error::Contract("missing parameter gradient".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some((value, grads)))
}

/// Mean next-token loss over blocks, without updating anything.
pub fn evaluate_loss(model: &Model, blocks: &[Block], batch_size: usize) -> Result<f32> {
    let mut total = 0.0f64;
    let mut count = 0usize;
    for batch in blocks.chunks(batch_size.max(1)) {
        let labels: Vec<Option<usize>> = batch.iter().flat_map(|b| b.labels.iter().copied()).collect();
        let n = labels.iter().filter(|l| l.is_some()).count();
        if n == 0 {
            continue;
        }
        let tokens: Vec<usize> = batch.iter().flat_map(|b| b.tokens.iter().copied()).collect();
        let mut tape = Tape::new();
        let vars = model.params.bind(&mut tape, false);
        let seq = batch[0].tokens.len();
        let logits = model.forward_tokens(&mut tape, &vars, &tokens, batch.len(), seq)?;
        let loss = tape.cross_entropy(logits, &labels)?;
        total += tape.value(loss).item()? as f64 * n as f64;
        count += n;
    }
    if count == 0 {
        return Err(Error::Contract("no labeled tokens to evaluate".into()));
    }
    Ok((total / count as f64) as f32)
}
