// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use kcircuits::corpus::Synthesis;
use kcircuits::model::{Checkpoint, Phase};
use kcircuits::rng;
use kcircuits::training::{epoch_blocks, evaluate_loss, pack_blocks, segment_stream, train, TrainConfig, TrainJob};

fn segments(seed: u64) -> (Synthesis, Vec<Vec<usize>>) {
    let s = common::small_corpus(seed);
    let segs = s
        .continual_corpus
        .iter()
        .map(|t| s.tokenizer.encode_known(t).unwrap())
        .collect();
    (s, segs)
}

fn cfg() -> TrainConfig {
    TrainConfig {
        batch_size: 4,
        block_size: 32,
        epochs: 3,
        learning_rate: 3e-3,
        ..TrainConfig::default()
    }
}

#[test]
fn training_lowers_loss_and_emits_every_epoch() {
    let (s, segs) = segments(31);
    let model = common::toy_model(&s, 1, 2, 16, 31);
    let c = cfg();
    let blocks = pack_blocks(&segment_stream(segs.iter().map(|v| &v[..])), c.block_size);
    let before = evaluate_loss(&model, &blocks, 4).unwrap();
    let mut last = None;
    let mut epochs = Vec::new();
    let job = TrainJob { config: &c, phase: Phase::Continual, segments: &segs, prior: None };
    let losses = train(&model, job, |ck: &Checkpoint| {
        epochs.push(ck.epoch);
        last = Some(ck.clone());
        Ok(())
    })
    .unwrap();
    assert_eq!(epochs, vec![0, 1, 2, 3]);
    assert!(!losses.is_empty());
    let trained = last.unwrap().model().unwrap();
    let after = evaluate_loss(&trained, &blocks, 4).unwrap();
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn training_is_deterministic() {
    let (s, segs) = segments(32);
    let model = common::toy_model(&s, 1, 1, 8, 32);
    let c = TrainConfig { epochs: 1, ..cfg() };
    let run = || {
        let mut out = Vec::new();
        let job = TrainJob { config: &c, phase: Phase::Continual, segments: &segs, prior: None };
        train(&model, job, |ck: &Checkpoint| {
            out.clear();
            ck.write_to(&mut out)?;
            Ok(())
        })
        .unwrap();
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn replay_replaces_the_requested_share_of_blocks() {
    let (_, segs) = segments(33);
    let prior: Vec<Vec<usize>> = vec![vec![999_999; 40]; 20];
    let mut r = rng::stream(1, "test/replay");
    let (plain, n0) = epoch_blocks(&segs, None, 16, 0.0, &mut r).unwrap();
    assert_eq!(n0, 0);
    let (mixed, n) = epoch_blocks(&segs, Some(&prior), 16, 0.5, &mut r).unwrap();
    assert_eq!(mixed.len(), plain.len());
    assert_eq!(n, (0.5 * plain.len() as f64).round() as usize);
    let replayed = mixed.iter().filter(|b| b.tokens.contains(&999_999)).count();
    assert_eq!(replayed, n);
    assert!(epoch_blocks(&segs, None, 16, 0.5, &mut r).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let (s, segs) = segments(34);
    let model = common::toy_model(&s, 1, 1, 8, 34);
    for bad in [
        TrainConfig { block_size: 64, ..cfg() },
        TrainConfig { learning_rate: 0.0, ..cfg() },
        TrainConfig { batch_size: 0, ..cfg() },
        TrainConfig { replay_ratio: 1.5, ..cfg() },
    ] {
        let job = TrainJob { config: &bad, phase: Phase::Base, segments: &segs, prior: None };
        assert!(train(&model, job, |_| Ok(())).is_err());
    }
}
