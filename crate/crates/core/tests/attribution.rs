// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use kcircuits::analysis::spearman;
use kcircuits::attribution::{
    calibrate_edge_budget, eap_ig_scores, evaluate_circuit, evaluate_mask, example_scores, extract_circuit,
    patching_oracle, scores_from_text, scores_to_text, sweep_sizes, Circuit, EdgeScores, PreparedSet, ScoreMeta,
};
use kcircuits::graph::CompGraph;
use proptest::prelude::*;

fn meta() -> ScoreMeta {
    ScoreMeta {
        steps: 5,
        examples: 1,
        checkpoint: "t".into(),
        position_contraction: "sum".into(),
    }
}

#[test]
fn eap_ig_tracks_exact_patching_on_toy_model() {
    let syn = common::small_corpus(3);
    let model = common::toy_model(&syn, 2, 2, 32, 3);
    let ex = common::toy_examples(&syn, 8, 3);
    let s = eap_ig_scores(&model, &ex, 5, 1, "toy").unwrap();
    let o = patching_oracle(&model, &ex, 1).unwrap();
    let a: Vec<f64> = s.scores.iter().map(|v| v.abs()).collect();
    let b: Vec<f64> = o.iter().map(|v| v.abs()).collect();
    let rho = spearman(&a, &b).unwrap();
    assert!(rho >= 0.8, "spearman {rho}");
}

#[test]
fn identical_inputs_score_exactly_zero() {
    let syn = common::small_corpus(4);
    let model = common::toy_model(&syn, 2, 2, 16, 4);
    let mut ex = common::toy_examples(&syn, 2, 4);
    for e in &mut ex {
        e.corrupted = e.clean.clone();
    }
    for e in &ex {
        assert!(example_scores(&model, e, 5).unwrap().iter().all(|&s| s == 0.0));
    }
}

#[test]
fn scores_do_not_depend_on_thread_count() {
    let syn = common::small_corpus(5);
    let model = common::toy_model(&syn, 2, 2, 16, 5);
    let ex = common::toy_examples(&syn, 6, 5);
    let a = eap_ig_scores(&model, &ex, 3, 1, "x").unwrap();
    let b = eap_ig_scores(&model, &ex, 3, 3, "x").unwrap();
    for (x, y) in a.scores.iter().zip(&b.scores) {
        assert!((x - y).abs() <= 1e-5, "{x} vs {y}");
    }
}

#[test]
fn full_circuit_matches_whole_model_and_empty_circuit_is_corrupted() {
    let syn = common::small_corpus(6);
    let model = common::toy_model(&syn, 2, 2, 16, 6);
    let ex = common::toy_examples(&syn, 6, 6);
    let set = PreparedSet::new(&model, &ex, 1).unwrap();
    let n = model.graph().n_edges();
    let full = evaluate_mask(&model, &vec![true; n], &set, 1).unwrap();
    assert_eq!(full, set.whole_model().unwrap());

    let empty = evaluate_mask(&model, &vec![false; n], &set, 1).unwrap();
    for (e, rank) in ex.iter().zip(&empty.ranks) {
        let logits = model.last_logits(&e.corrupted).unwrap();
        assert_eq!(*rank, kcircuits::model::rank_of(&logits, e.target));
    }
}

#[test]
fn extraction_bounds() {
    let g = CompGraph::build(2, 2);
    let scores = EdgeScores {
        scores: (0..g.n_edges()).map(|i| i as f64 - 20.0).collect(),
        meta: meta(),
    };
    assert!(extract_circuit(&g, &scores, 0).unwrap().is_empty());
    assert_eq!(extract_circuit(&g, &scores, g.n_edges()).unwrap().len(), g.n_edges());
    assert!(extract_circuit(&g, &scores, g.n_edges() + 1).is_err());
    // |score| ties resolve toward the lower edge index.
    let tied = EdgeScores {
        scores: vec![1.0; g.n_edges()],
        meta: meta(),
    };
    assert_eq!(extract_circuit(&g, &tied, 3).unwrap().edges, vec![0, 1, 2]);
}

#[test]
fn non_finite_scores_are_rejected() {
    let g = CompGraph::build(1, 1);
    let mut s = vec![0.0; g.n_edges()];
    s[1] = f64::NAN;
    assert!(extract_circuit(&g, &EdgeScores { scores: s, meta: meta() }, 1).is_err());
}

proptest! {
    #[test]
    fn larger_budgets_contain_smaller_circuits(
        raw in proptest::collection::vec(-3i32..3, 46),
        a in 0usize..47,
        b in 0usize..47,
    ) {
        let g = CompGraph::build(2, 2);
        let scores = EdgeScores { scores: raw.iter().map(|&v| v as f64 * 0.5).collect(), meta: meta() };
        let (lo, hi) = (a.min(b), a.max(b));
        let small = extract_circuit(&g, &scores, lo).unwrap();
        let large = extract_circuit(&g, &scores, hi).unwrap();
        prop_assert!(small.edges.iter().all(|e| large.edges.contains(e)));
        let min_in = large.edges.iter().map(|&e| scores.scores[e].abs()).fold(f64::INFINITY, f64::min);
        for e in 0..g.n_edges() {
            if !large.edges.contains(&e) {
                prop_assert!(scores.scores[e].abs() <= min_in);
            }
        }
    }

    #[test]
    fn score_and_circuit_text_round_trip(raw in proptest::collection::vec(-1e3f64..1e3, 46), n in 0usize..47) {
        let g = CompGraph::build(2, 2);
        let scores = EdgeScores { scores: raw, meta: meta() };
        let text = scores_to_text(&g, &scores, &["h".into()]);
        prop_assert_eq!(&scores_from_text(&g, &text, meta()).unwrap(), &scores);
        let c = extract_circuit(&g, &scores, n).unwrap();
        let back = Circuit::from_text(&g, &c.to_text(&g, &[]), &c.provenance).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn sweep_sizes_double_up_to_the_edge_count() {
    assert_eq!(sweep_sizes(46), vec![16, 32, 46]);
    assert_eq!(sweep_sizes(64), vec![16, 32, 64]);
    assert_eq!(sweep_sizes(10), vec![10]);
}

#[test]
fn calibration_picks_first_budget_reaching_target() {
    let syn = common::small_corpus(7);
    let model = common::toy_model(&syn, 2, 2, 16, 7);
    let ex = common::toy_examples(&syn, 8, 7);
    let set = PreparedSet::new(&model, &ex, 1).unwrap();
    let scores = eap_ig_scores(&model, &ex, 3, 1, "x").unwrap();
    let cal = calibrate_edge_budget(&model, &scores, &set, 1.0, 1).unwrap();
    let whole = set.whole_model().unwrap().hit_at_10;
    if whole == 0.0 {
        assert!(cal.degenerate);
        assert_eq!(cal.n_edges, 16);
    } else {
        assert!(!cal.degenerate);
        assert!(cal.circuit_hit >= whole);
        for &(n, hit) in &cal.sweep[..cal.sweep.len() - 1] {
            assert!(n < cal.n_edges && hit < whole);
        }
        let c = extract_circuit(model.graph(), &scores, cal.n_edges).unwrap();
        assert_eq!(evaluate_circuit(&model, &c, &set, 1).unwrap().hit_at_10, cal.circuit_hit);
    }
    assert!(calibrate_edge_budget(&model, &scores, &set, 0.0, 1).is_err());
}

#[test]
fn mismatched_circuit_is_rejected() {
    let syn = common::small_corpus(8);
    let model = common::toy_model(&syn, 2, 2, 16, 8);
    let ex = common::toy_examples(&syn, 2, 8);
    let set = PreparedSet::new(&model, &ex, 1).unwrap();
    let g = CompGraph::build(1, 2);
    let c = Circuit::from_edges(&g, vec![0], &vec![1.0; g.n_edges()], "x");
    assert!(evaluate_circuit(&model, &c, &set, 1).is_err());
}
