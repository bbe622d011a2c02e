// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::collections::HashSet;

use kcircuits::corpus::{
    corpus_from_text, corpus_to_text, examples_from_text, examples_to_text, manifest_from_text, manifest_to_text,
    FrequencyBand, KnowledgeType, TaskFilter,
};

#[test]
fn synthesis_is_deterministic_per_seed() {
    let a = common::small_corpus(21);
    let b = common::small_corpus(21);
    let c = common::small_corpus(22);
    assert_eq!(corpus_to_text(&a.base_corpus), corpus_to_text(&b.base_corpus));
    assert_eq!(corpus_to_text(&a.continual_corpus), corpus_to_text(&b.continual_corpus));
    assert_eq!(corpus_to_text(&a.forget_corpus), corpus_to_text(&b.forget_corpus));
    assert_eq!(a.tokenizer.to_text(), b.tokenizer.to_text());
    assert_ne!(corpus_to_text(&a.continual_corpus), corpus_to_text(&c.continual_corpus));
}

#[test]
fn stages_use_disjoint_subjects() {
    let s = common::small_corpus(23);
    let names = |v: &[kcircuits::corpus::EntityProfile]| v.iter().map(|e| e.subject()).collect::<HashSet<_>>();
    let base = names(&s.base_entities);
    let cont = names(&s.continual_entities);
    let forget = names(&s.forget_entities);
    assert!(base.is_disjoint(&cont) && base.is_disjoint(&forget) && cont.is_disjoint(&forget));
    // Anchors are the relevant continual subjects, introduced during the base stage.
    let rel: HashSet<_> = s
        .continual_entities
        .iter()
        .filter(|e| e.knowledge_type == KnowledgeType::Relevant)
        .map(|e| e.subject())
        .collect();
    assert_eq!(names(&s.anchors), rel);
    assert!(!rel.is_empty());
    let base_text = corpus_to_text(&s.base_corpus);
    assert!(rel.iter().all(|n| base_text.contains(n.as_str())));
}

#[test]
fn every_sentence_encodes_and_frequencies_match() {
    let s = common::small_corpus(24);
    for seg in s.base_corpus.iter().chain(&s.continual_corpus) {
        s.tokenizer.encode_known(seg).unwrap();
    }
    for e in &s.continual_entities {
        assert!(e.frequency >= 1);
        let n = s.continual_corpus.iter().filter(|seg| seg.starts_with(&e.subject())).count();
        assert!(n > 0, "{} never appears", e.subject());
    }
}

#[test]
fn task_examples_are_well_formed_and_round_trip() {
    let s = common::small_corpus(25);
    let ex = common::toy_examples(&s, 6, 25);
    assert_eq!(ex.len(), 6);
    for e in &ex {
        e.check(s.tokenizer.len()).unwrap();
        assert_ne!(e.target, e.corrupted_target);
        assert_ne!(e.subject, e.corrupted_subject);
        assert_eq!(e.knowledge_type, KnowledgeType::CompletelyNew);
        assert_eq!(e.band, FrequencyBand::of(e.frequency));
        assert!(TaskFilter::Type(KnowledgeType::CompletelyNew).name() == "K_compl");
    }
    assert_eq!(examples_from_text(&examples_to_text(&ex)).unwrap(), ex);
}

#[test]
fn text_formats_round_trip() {
    let s = common::small_corpus(26);
    assert_eq!(corpus_from_text(&corpus_to_text(&s.base_corpus)), s.base_corpus);
    assert_eq!(manifest_from_text(&manifest_to_text(&s.continual_entities)).unwrap(), s.continual_entities);
    assert!(manifest_from_text("garbage\tline").is_err());
}

#[test]
fn unique_first_word_ratios_of_builtin_pools() {
    use kcircuits::corpus::{first_word, Pools};
    let p = Pools::builtin();
    let ratio = |pool: &[String]| {
        let firsts: HashSet<&str> = pool.iter().map(|a| first_word(a)).collect();
        (firsts.len(), pool.len())
    };
    // Pool sizes follow the reference pools. A subword tokenizer's first token
    // is a function of the first word, so the reference subword counts
    // (city 151, major 138, company 142, university 102) bound these from below.
    assert_eq!(ratio(&p.cities), (203, 221));
    assert_eq!(ratio(&p.majors), (166, 188));
    assert_eq!(ratio(&p.companies), (197, 202));
    assert_eq!(ratio(&p.universities), (122, 250));
}
