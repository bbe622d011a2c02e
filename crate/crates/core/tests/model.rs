// SPDX-License-Identifier: MIT OR Apache-2.0

use kcircuits::autodiff::Tensor;
use kcircuits::graph::{Channel, NodeId, ReadPoint};
use kcircuits::model::{
    node_slot, Checkpoint, LogitRows, Model, ModelConfig, OptimizerState, Phase, RngState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy(seed: u64, tie: bool) -> Model {
    let mut cfg = ModelConfig::new(2, 2, 8, 11, 12);
    cfg.tie_unembedding = tie;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Model::init(cfg, &mut rng).unwrap();
    // Larger-than-init weights so differences between paths are not hidden by tiny activations.
    for t in m.params.tensors_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    m
}

fn tokens(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..11)).collect()
}

#[test]
fn hooked_and_batched_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for tie in [false, true] {
        let m = toy(1, tie);
        let toks = tokens(&mut rng, 7);
        let a = m.logits(&toks).unwrap();
        let (b, _) = m.run_with_cache(&toks).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-4, "diff {}", a.max_abs_diff(&b));
    }
}

#[test]
fn residual_is_sum_of_upstream_contributions() {
    let m = toy(2, false);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let toks = tokens(&mut rng, 6);
    let (_, state) = m.run_with_cache(&toks).unwrap();
    let g = m.graph();
    for (point, input) in &state.read_inputs {
        let mut sum = Tensor::zeros(input.shape());
        for &e in g.incoming(point.node, point.channel) {
            let src = node_slot(2, 2, g.edge(e).source);
            sum.add_assign(&state.node_outputs[src]).unwrap();
        }
        assert!(sum.max_abs_diff(input) < 1e-4, "{point:?}");
    }
    assert!(state.read_inputs.contains_key(&ReadPoint {
        node: NodeId::Logits,
        channel: Channel::In
    }));
}

#[test]
fn future_tokens_do_not_change_past_logits() {
    let m = toy(4, false);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut toks = tokens(&mut rng, 8);
    let before = m.logits(&toks).unwrap();
    toks[5] = (toks[5] + 1) % 11;
    toks[7] = (toks[7] + 3) % 11;
    let after = m.logits(&toks).unwrap();
    for t in 0..5 {
        for (x, y) in before.row(t).iter().zip(after.row(t)) {
            assert_eq!(x, y);
        }
    }
}

#[test]
fn patch_identities() {
    let m = toy(6, false);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let clean = tokens(&mut rng, 6);
    let corrupt = tokens(&mut rng, 6);
    let (clean_logits, _) = m.run_with_cache(&clean).unwrap();
    let (corrupt_logits, corrupt_state) = m.run_with_cache(&corrupt).unwrap();
    let n = m.graph().n_edges();

    let full = m
        .run_patched(&clean, &vec![true; n], &corrupt_state.node_outputs, LogitRows::All)
        .unwrap();
    assert!(full.max_abs_diff(&clean_logits) < 1e-4);

    let empty = m
        .run_patched(&clean, &vec![false; n], &corrupt_state.node_outputs, LogitRows::All)
        .unwrap();
    assert!(empty.max_abs_diff(&corrupt_logits) < 1e-4);

    // Baseline equal to the clean run: patching is a no-op.
    let (_, clean_state) = m.run_with_cache(&clean).unwrap();
    let mut mask = vec![false; n];
    mask[3] = true;
    let same = m
        .run_patched(&clean, &mask, &clean_state.node_outputs, LogitRows::All)
        .unwrap();
    assert!(same.max_abs_diff(&clean_logits) < 1e-4);
}

#[test]
fn final_residual_unembeds_to_model_output() {
    let m = toy(8, false);
    let toks = vec![1, 2, 3, 4, 5];
    let (logits, state) = m.run_with_cache(&toks).unwrap();
    let resid = &state.read_inputs[&ReadPoint {
        node: NodeId::Logits,
        channel: Channel::In,
    }];
    let last = resid.row(toks.len() - 1);
    let lens = m.unembed_residual(last, true).unwrap();
    for (a, b) in lens.iter().zip(logits.row(toks.len() - 1)) {
        assert!((a - b).abs() < 1e-4);
    }
}

#[test]
fn zero_residual_without_bias_gives_zero_logits() {
    let cfg = ModelConfig::new(1, 1, 4, 6, 4);
    let m = Model::init(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let out = m.unembed_residual(&[0.0; 4], false).unwrap();
    assert!(out.iter().all(|&v| v == 0.0));
    assert!(m.unembed_residual(&[0.0; 3], false).is_err());
}

#[test]
fn bad_token_is_rejected() {
    let m = toy(1, false);
    assert!(m.logits(&[0, 11]).is_err());
    assert!(m.logits(&[0; 13]).is_err());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let m = toy(10, false);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let _: u64 = rng.gen();
    let mut opt = OptimizerState::zeros_like(&m.params);
    opt.step = 17;
    opt.m[0].data_mut()[0] = 0.25;
    let ck = Checkpoint {
        config: m.config.clone(),
        params: m.params.clone(),
        optimizer: opt,
        epoch: 4,
        phase: Phase::Continual,
        rng: RngState::capture(&rng),
    };
    let mut buf = Vec::new();
    ck.write_to(&mut buf).unwrap();
    let back = Checkpoint::read_from(&mut buf.as_slice()).unwrap();
    assert_eq!(back, ck);
    let toks = vec![3, 1, 4, 1, 5];
    let a = m.logits(&toks).unwrap();
    let b = back.model().unwrap().logits(&toks).unwrap();
    assert_eq!(a.data(), b.data());
    let mut restored = back.rng.restore();
    let mut orig = rng.clone();
    assert_eq!(restored.gen::<u64>(), orig.gen::<u64>());

    buf[0] = b'X';
    assert!(Checkpoint::read_from(&mut buf.as_slice()).is_err());
}
