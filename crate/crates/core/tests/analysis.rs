// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::collections::HashSet;

use kcircuits::analysis::{
    circuit_entropy, classify_dla, classify_heads, classify_ratio, detect_phase_shift, edge_activation_ratio,
    head_counts, hit_at_10, jaccard, lens_table, logit_lens_trace, smooth, two_segment_fit, whole_model_accuracies,
    HeadKind,
};
use kcircuits::attribution::Circuit;
use kcircuits::graph::{Channel, CompGraph, EdgeId, NodeId};
use kcircuits::model::rank_of;
use proptest::prelude::*;

#[test]
fn uniform_entropy_is_ln_n() {
    for n in [1usize, 2, 7, 100, 4096] {
        let h = circuit_entropy(&vec![0.37; n]).unwrap();
        assert!((h - (n as f64).ln()).abs() < 1e-9, "n={n}: {h}");
        // Signs are ignored.
        let mixed: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 2.0 } else { -2.0 }).collect();
        assert!((circuit_entropy(&mixed).unwrap() - (n as f64).ln()).abs() < 1e-9);
    }
    assert_eq!(circuit_entropy(&[5.0, 0.0, 0.0]).unwrap(), 0.0);
    assert!(circuit_entropy(&[0.0, 0.0]).is_err());
    assert!(circuit_entropy(&[]).is_err());
}

#[test]
fn jaccard_worked_examples() {
    let s = |v: &[u32]| v.iter().copied().collect::<HashSet<u32>>();
    assert_eq!(jaccard(&s(&[1, 2, 3]), &s(&[2, 3, 4])), 0.5);
    assert_eq!(jaccard(&s(&[1, 2]), &s(&[1, 2])), 1.0);
    assert_eq!(jaccard(&s(&[1]), &s(&[2])), 0.0);
    assert_eq!(jaccard(&s(&[1, 2, 3, 4]), &s(&[1])), 0.25);
    assert_eq!(jaccard(&s(&[]), &s(&[])), 1.0);
    assert_eq!(jaccard(&s(&[]), &s(&[7])), 0.0);
}

#[test]
fn hit_at_10_boundary() {
    assert_eq!(hit_at_10(&[10]).unwrap(), 1.0);
    assert_eq!(hit_at_10(&[11]).unwrap(), 0.0);
    assert_eq!(hit_at_10(&[1, 10, 11, 500]).unwrap(), 0.5);
    assert!(hit_at_10(&[]).is_err());
    assert!(hit_at_10(&[0]).is_err());
}

#[test]
fn head_classes_at_tau_boundaries() {
    let h = NodeId::Head { layer: 0, head: 0 };
    let tau = 10.0;
    assert_eq!(classify_ratio(10.0, tau), HeadKind::Mixture);
    assert_eq!(classify_ratio(10.0 + 1e-9, tau), HeadKind::Mover);
    assert_eq!(classify_ratio(0.1, tau), HeadKind::Mixture);
    assert_eq!(classify_ratio(0.1 - 1e-12, tau), HeadKind::Relation);
    assert_eq!(classify_ratio(1.0, tau), HeadKind::Mixture);

    // DLA sums: exact ratios and signs.
    assert_eq!(classify_dla(h, 20.0, 2.0, tau).class, HeadKind::Mixture);
    assert_eq!(classify_dla(h, -20.5, 2.0, tau).class, HeadKind::Mover);
    assert_eq!(classify_dla(h, 0.5, -5.0, tau).class, HeadKind::Mixture);
    assert_eq!(classify_dla(h, 0.25, -5.0, tau).class, HeadKind::Relation);

    let d = classify_dla(h, 1.0, 0.0, tau);
    assert!(d.degenerate && d.class == HeadKind::Mover && d.ratio.is_infinite());
    let d = classify_dla(h, 0.0, 0.0, tau);
    assert!(d.degenerate && d.class == HeadKind::Mixture && d.ratio.is_nan());
    let d = classify_dla(h, 0.0, 3.0, tau);
    assert!(!d.degenerate && d.class == HeadKind::Relation);
}

#[test]
fn head_counts_by_layer() {
    let c = |layer, head, a, b| classify_dla(NodeId::Head { layer, head }, a, b, 10.0);
    let classes = vec![c(0, 0, 100.0, 1.0), c(0, 1, 1.0, 1.0), c(1, 0, 0.0, 1.0), c(1, 1, 0.0, 1.0)];
    assert_eq!(head_counts(&classes, 2), vec![[1, 0, 1], [0, 2, 0]]);
}

#[test]
fn classify_heads_covers_every_head_and_rejects_bad_tau() {
    let syn = common::small_corpus(11);
    let model = common::toy_model(&syn, 2, 2, 16, 11);
    let ex = common::toy_examples(&syn, 3, 11);
    let classes = classify_heads(&model, &ex, 10.0).unwrap();
    assert_eq!(classes.len(), 4);
    assert!(classes.iter().all(|c| c.dla_subject.is_finite() && c.dla_relation.is_finite()));
    assert!(classify_heads(&model, &ex, 1.0).is_err());
}

#[test]
fn phase_shift_on_constructed_curves() {
    // Steep then flat, kink at index 4.
    let y = [0.0, 2.0, 4.0, 6.0, 8.0, 8.5, 9.0, 9.5, 10.0];
    let p = two_segment_fit(&y).unwrap();
    assert_eq!(p.breakpoint, 4);
    assert!((p.slope_before - 2.0).abs() < 1e-12);
    assert!((p.slope_after - 0.5).abs() < 1e-12);
    assert!(p.sse < 1e-20);
    assert!(p.shift);

    // Slow then fast: a breakpoint exists but no shift.
    let y = [0.0, 0.5, 1.0, 1.5, 2.0, 4.0, 6.0, 8.0];
    let p = two_segment_fit(&y).unwrap();
    assert_eq!(p.breakpoint, 4);
    assert!(!p.shift);

    // A straight line fits equally at every split; the earliest wins.
    let y: Vec<f64> = (0..8).map(|i| 3.0 * i as f64).collect();
    let p = two_segment_fit(&y).unwrap();
    assert_eq!(p.breakpoint, 1);
    assert!(!p.shift);

    // Flat series: zero slopes do not count as a shift.
    assert!(!two_segment_fit(&[1.0; 6]).unwrap().shift);

    // Smoothing keeps a clean kink detectable.
    let y = [0.0, 0.3, 0.6, 0.9, 1.2, 1.25, 1.3, 1.35, 1.4, 1.45];
    let p = detect_phase_shift(&y, 3).unwrap();
    assert!(p.shift && (3..=5).contains(&p.breakpoint), "{p:?}");

    assert!(two_segment_fit(&[1.0, 2.0, 3.0, 4.0]).is_err());
    assert!(two_segment_fit(&[1.0, 2.0, f64::NAN, 4.0, 5.0]).is_err());
}

#[test]
fn smoothing_keeps_ends_and_lines() {
    assert_eq!(smooth(&[0.0, 3.0, 6.0, 9.0], 3), vec![0.0, 3.0, 6.0, 9.0]);
    assert_eq!(smooth(&[0.0, 3.0, 0.0, 3.0, 0.0], 3), vec![0.0, 1.0, 2.0, 1.0, 0.0]);
    assert_eq!(smooth(&[4.0, 1.0], 1), vec![4.0, 1.0]);
}

#[test]
fn activation_ratio_of_a_single_input_edge() {
    let g = CompGraph::build(1, 1);
    let h = NodeId::Head { layer: 0, head: 0 };
    let e = g
        .require_edge(&EdgeId {
            source: NodeId::Input,
            destination: h,
            channel: Channel::Q,
        })
        .unwrap();
    let c = Circuit::from_edges(&g, vec![e], &vec![1.0; g.n_edges()], "x");
    let r = edge_activation_ratio(&c, &g).unwrap();
    assert_eq!(r.input, 1.0 / 5.0);
    assert!(r.layers.is_empty());

    let g = CompGraph::build(3, 2);
    let all = Circuit::from_edges(&g, (0..g.n_edges()).collect(), &vec![1.0; g.n_edges()], "x");
    let r = edge_activation_ratio(&all, &g).unwrap();
    assert_eq!(r.input, 1.0);
    assert_eq!(r.layers, vec![1.0, 1.0]);
}

#[test]
fn lens_final_boundary_is_the_model_output() {
    let syn = common::small_corpus(12);
    let model = common::toy_model(&syn, 2, 2, 16, 12);
    let ex = common::toy_examples(&syn, 4, 12);
    let table = lens_table(&model, &ex, true).unwrap();
    for (e, row) in ex.iter().zip(&table) {
        assert_eq!(row.len(), 3);
        let logits = model.last_logits(&e.clean).unwrap();
        assert_eq!(row[2].0, rank_of(&logits, e.target));
    }
    let trace = logit_lens_trace(&model, &ex, true).unwrap();
    assert_eq!(trace.iter().map(|p| p.layer).collect::<Vec<_>>(), vec![0, 1, 2]);
    // An untrained model spreads mass close to uniformly.
    let v = model.config.vocab_size as f64;
    for p in &trace {
        assert!(p.mean_probability > 0.2 / v && p.mean_probability < 5.0 / v, "{p:?}");
    }
}

#[test]
fn query_accuracy_never_exceeds_first_token_accuracy() {
    let syn = common::small_corpus(13);
    let model = common::toy_model(&syn, 1, 2, 16, 13);
    let ex = common::toy_examples(&syn, 6, 13);
    let a = whole_model_accuracies(&model, &ex, 1).unwrap();
    assert!(a.query <= a.first_token);
    assert!((0.0..=1.0).contains(&a.first_token));
}

proptest! {
    #[test]
    fn entropy_is_bounded(scores in proptest::collection::vec(-10.0f64..10.0, 1..64)) {
        prop_assume!(scores.iter().any(|s| *s != 0.0));
        let h = circuit_entropy(&scores).unwrap();
        prop_assert!(h >= 0.0 && h <= (scores.len() as f64).ln() + 1e-9);
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(
        a in proptest::collection::hash_set(0u32..20, 0..10),
        b in proptest::collection::hash_set(0u32..20, 0..10),
    ) {
        let j = jaccard(&a, &b);
        prop_assert_eq!(j, jaccard(&b, &a));
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(jaccard(&a, &a), 1.0);
    }

    #[test]
    fn smoothing_stays_within_range(values in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
        let s = smooth(&values, 3);
        prop_assert_eq!(s.len(), values.len());
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
    }

    #[test]
    fn hit_rate_is_monotone_in_ranks(ranks in proptest::collection::vec(1usize..40, 1..30)) {
        let better: Vec<usize> = ranks.iter().map(|r| (r / 2).max(1)).collect();
        prop_assert!(hit_at_10(&better).unwrap() >= hit_at_10(&ranks).unwrap());
    }
}
