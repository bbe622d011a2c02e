// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

pub mod grad;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use kcircuits::corpus::{
    make_task_examples, synthesize, CorpusConfig, FreqParams, KnowledgeType, Pools, Relation, Synthesis, TaskExample,
    TaskFilter, Templates, TypeRatio,
};
use kcircuits::experiment::ExperimentConfig;
use kcircuits::model::{Model, ModelConfig};
use kcircuits::rng;

pub fn small_corpus(seed: u64) -> Synthesis {
    let cfg = CorpusConfig {
        n_entities: 40,
        type_ratio: TypeRatio::default(),
        freq: FreqParams::default(),
        n_base_entities: 10,
        n_forget_entities: 10,
        templates_per_relation: 2,
        anchor_frequency: None,
    };
    synthesize(&Pools::builtin(), &Templates::builtin(2).unwrap(), &cfg, seed).unwrap()
}

pub fn toy_model(syn: &Synthesis, layers: usize, heads: usize, d_model: usize, seed: u64) -> Model {
    let cfg = ModelConfig::new(layers, heads, d_model, syn.tokenizer.len(), 32);
    Model::init(cfg, &mut rng::stream(seed, "test/model")).unwrap()
}

pub fn toy_examples(syn: &Synthesis, k: usize, seed: u64) -> Vec<TaskExample> {
    let mut r = rng::stream(seed, "test/examples");
    make_task_examples(
        &syn.tokenizer,
        &syn.continual_entities,
        &syn.continual_entities,
        Relation::City,
        TaskFilter::Type(KnowledgeType::CompletelyNew),
        k,
        &mut r,
    )
    .unwrap()
}

/// Every file under `root`, keyed by relative path.
pub fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// A pipeline config that runs end to end in seconds.
pub fn tiny_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.corpus.n_entities = 60;
    c.corpus.n_base_entities = 20;
    c.corpus.n_forget_entities = 20;
    c.corpus.templates_per_relation = 3;
    c.model.n_layers = 2;
    c.model.n_heads = 2;
    c.model.d_model = 16;
    c.train.base.epochs = 1;
    c.train.continual.epochs = 5;
    c.train.forgetting.epochs = 1;
    c.discovery.steps = 2;
    c.discovery.val_examples = 4;
    c.discovery.test_examples = 4;
    c
}
