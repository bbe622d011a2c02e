// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic biography corpora and factual-recall tasks.
//!
//! Three stages share one vocabulary:
//!
//! * base: fully described base entities, plus the subjects of the relevant
//!   knowledge stated only through their birth date and university;
//! * continual: relevant entities (base subjects with new city, major and
//!   company) and completely new entities;
//! * forgetting: fresh entities for the follow-up stage.

mod entities;
mod pools;
mod render;
mod tasks;
mod tokenizer;

pub use entities::{generate_entities, EntityProfile, FreqParams, KnowledgeType, Name, Triple, TypeRatio};
pub use pools::{format_birth_date, Pools, Relation, MONTHS};
pub use render::{fill, render_corpus, render_relations, Templates};
pub use tasks::{
    make_task_examples, make_task_split, query_tokens, FrequencyBand, TaskExample, TaskFilter, TaskFilterName,
};
pub use tokenizer::{first_token_ratio, first_word, split_words, Encoded, Tokenizer, PAD, SEP, SPECIALS, UNK};

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Relations the base corpus states about subjects of relevant knowledge.
pub const ANCHOR_RELATIONS: [Relation; 2] = [Relation::BirthDate, Relation::University];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Entities in the continual corpus.
    pub n_entities: usize,
    pub type_ratio: TypeRatio,
    pub freq: FreqParams,
    /// Fully described entities in the base corpus.
    pub n_base_entities: usize,
    /// Fresh entities in the forgetting corpus.
    pub n_forget_entities: usize,
    pub templates_per_relation: usize,
    /// Base-corpus appearances of each relevant subject; drawn from `freq` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_frequency: Option<u32>,
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        self.freq.validate()?;
        if self.n_entities == 0 {
            return Err(Error::Config("corpus.n_entities must be at least 1".into()));
        }
        if self.anchor_frequency == Some(0) {
            return Err(Error::Config("corpus.anchor_frequency must be at least 1".into()));
        }
        if self.templates_per_relation == 0 {
            return Err(Error::Config("corpus.templates_per_relation must be at least 1".into()));
        }
        Ok(())
    }
}

/// All stage corpora and the shared vocabulary.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub base_entities: Vec<EntityProfile>,
    /// Relevant subjects as they appear in the base corpus (base-stage frequency).
    pub anchors: Vec<EntityProfile>,
    pub continual_entities: Vec<EntityProfile>,
    pub forget_entities: Vec<EntityProfile>,
    pub base_corpus: Vec<String>,
    pub continual_corpus: Vec<String>,
    pub forget_corpus: Vec<String>,
    pub tokenizer: Tokenizer,
}

pub fn synthesize(pools: &Pools, templates: &Templates, cfg: &CorpusConfig, seed: u64) -> Result<Synthesis> {
    cfg.validate()?;
    let mut taken: HashSet<Name> = HashSet::new();

    let mut r = rng::stream(seed, "corpus/continual-entities");
    let continual_entities = generate_entities(pools, cfg.n_entities, cfg.type_ratio, cfg.freq, &mut r, &taken)?;
    taken.extend(continual_entities.iter().map(|e| e.name.clone()));

    let mut r = rng::stream(seed, "corpus/base-entities");
    let base_entities = if cfg.n_base_entities > 0 {
        let no_relevant = TypeRatio {
            relevant: 0,
            completely_new: 1,
        };
        generate_entities(pools, cfg.n_base_entities, no_relevant, cfg.freq, &mut r, &taken)?
    } else {
        Vec::new()
    };
    taken.extend(base_entities.iter().map(|e| e.name.clone()));

    let mut r = rng::stream(seed, "corpus/anchor-frequency");
    let anchors: Vec<EntityProfile> = continual_entities
        .iter()
        .filter(|e| e.knowledge_type == KnowledgeType::Relevant)
        .map(|e| EntityProfile {
            frequency: cfg.anchor_frequency.unwrap_or_else(|| cfg.freq.sample(&mut r)),
            ..e.clone()
        })
        .collect();

    let mut r = rng::stream(seed, "corpus/forget-entities");
    let forget_entities = if cfg.n_forget_entities > 0 {
        let no_relevant = TypeRatio {
            relevant: 0,
            completely_new: 1,
        };
        generate_entities(pools, cfg.n_forget_entities, no_relevant, cfg.freq, &mut r, &taken)?
    } else {
        Vec::new()
    };

    let mut r = rng::stream(seed, "corpus/render-base");
    let mut base_corpus = render_corpus(&base_entities, templates, &mut r)?;
    base_corpus.extend(render_relations(&anchors, &ANCHOR_RELATIONS, templates, &mut r)?);
    let mut r = rng::stream(seed, "corpus/render-continual");
    let continual_corpus = render_corpus(&continual_entities, templates, &mut r)?;
    let mut r = rng::stream(seed, "corpus/render-forget");
    let forget_corpus = render_corpus(&forget_entities, templates, &mut r)?;

    let phrases: Vec<&str> = Relation::TASKS.iter().filter_map(|r| r.query_phrase()).collect();
    let tokenizer = Tokenizer::build(
        base_corpus
            .iter()
            .chain(&continual_corpus)
            .chain(&forget_corpus)
            .map(String::as_str)
            .chain(phrases),
    )?;

    Ok(Synthesis {
        base_entities,
        anchors,
        continual_entities,
        forget_entities,
        base_corpus,
        continual_corpus,
        forget_corpus,
        tokenizer,
    })
}

/// One segment per line.
pub fn corpus_to_text(segments: &[String]) -> String {
    let mut s = String::new();
    for seg in segments {
        s.push_str(seg);
        s.push('\n');
    }
    s
}

pub fn corpus_from_text(text: &str) -> Vec<String> {
    text.lines().filter(|l| !l.is_empty()).map(String::from).collect()
}

const MANIFEST_HEADER: &str = "name\tknowledge_type\tfrequency\tbirth_date\tcity\tmajor\tuniversity\tcompany";

/// Tab-separated entity manifest with a header row.
pub fn manifest_to_text(entities: &[EntityProfile]) -> String {
    let mut s = String::from(MANIFEST_HEADER);
    s.push('\n');
    for e in entities {
        let _ = write!(s, "{}\t{}\t{}", e.name, e.knowledge_type, e.frequency);
        for r in Relation::ALL {
            let _ = write!(s, "\t{}", e.attribute(r));
        }
        s.push('\n');
    }
    s
}

pub fn manifest_from_text(text: &str) -> Result<Vec<EntityProfile>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(Error::format("entity manifest", "missing header row"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 {
            return Err(Error::format("entity manifest", format!("row {} has {} columns", i + 1, cols.len())));
        }
        let parts: Vec<&str> = cols[0].split(' ').collect();
        if parts.len() != 3 {
            return Err(Error::format("entity manifest", format!("row {}: name must have 3 parts", i + 1)));
        }
        let name = Name {
            first: parts[0].into(),
            middle: parts[1].into(),
            last: parts[2].into(),
        };
        let frequency = cols[2]
            .parse()
            .map_err(|_| Error::format("entity manifest", format!("row {}: bad frequency", i + 1)))?;
        let triples = Relation::ALL
            .iter()
            .enumerate()
            .map(|(j, &relation)| Triple {
                subject: cols[0].into(),
                relation,
                attribute: cols[3 + j].into(),
            })
            .collect();
        out.push(EntityProfile {
            name,
            triples,
            knowledge_type: cols[1].parse()?,
            frequency,
        });
    }
    Ok(out)
}

/// JSON lines, one example per line.
pub fn examples_to_text(examples: &[TaskExample]) -> String {
    let mut s = String::new();
    for e in examples {
        s.push_str(&serde_json::to_string(e).expect("task example serializes"));
        s.push('\n');
    }
    s
}

pub fn examples_from_text(text: &str) -> Result<Vec<TaskExample>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| serde_json::from_str(l).map_err(|e| Error::format("task examples", e.to_string())))
        .collect()
}
