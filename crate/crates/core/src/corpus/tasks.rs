// SPDX-License-Identifier: MIT OR Apache-2.0

//! Factual-recall task examples: clean/corrupted query pairs.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::entities::{EntityProfile, KnowledgeType};
use super::pools::Relation;
use super::tokenizer::{first_word, Tokenizer, SEP};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyBand {
    /// `[1, 2)`
    Low,
    /// `[2, 5]`
    Medium,
    /// `(5, 27]`
    High,
}

impl FrequencyBand {
    pub const ALL: [FrequencyBand; 3] = [FrequencyBand::Low, FrequencyBand::Medium, FrequencyBand::High];

    pub fn of(frequency: u32) -> Self {
        match frequency {
            0..=1 => FrequencyBand::Low,
            2..=5 => FrequencyBand::Medium,
            _ => FrequencyBand::High,
        }
    }

    pub fn contains(self, frequency: u32) -> bool {
        frequency >= 1 && Self::of(frequency) == self
    }

    pub fn name(self) -> &'static str {
        match self {
            FrequencyBand::Low => "low",
            FrequencyBand::Medium => "medium",
            FrequencyBand::High => "high",
        }
    }
}

/// Which entities a task draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskFilter {
    Type(KnowledgeType),
    Band(FrequencyBand),
}

impl TaskFilter {
    pub fn matches(&self, e: &EntityProfile) -> bool {
        match self {
            TaskFilter::Type(t) => e.knowledge_type == *t,
            TaskFilter::Band(b) => b.contains(e.frequency),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskFilter::Type(t) => t.label(),
            TaskFilter::Band(b) => match b {
                FrequencyBand::Low => "Low-freq",
                FrequencyBand::Medium => "Medium-freq",
                FrequencyBand::High => "High-freq",
            },
        }
    }

    pub fn all() -> [TaskFilter; 5] {
        [
            TaskFilter::Type(KnowledgeType::Relevant),
            TaskFilter::Type(KnowledgeType::CompletelyNew),
            TaskFilter::Band(FrequencyBand::Low),
            TaskFilter::Band(FrequencyBand::Medium),
            TaskFilter::Band(FrequencyBand::High),
        ]
    }
}

impl fmt::Display for TaskFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskFilter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TaskFilter::all()
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .or_else(|| {
                FrequencyBand::ALL
                    .into_iter()
                    .find(|b| b.name().eq_ignore_ascii_case(s))
                    .map(TaskFilter::Band)
            })
            .ok_or_else(|| Error::Config(format!("unknown task filter `{s}`")))
    }
}

impl Serialize for TaskFilterName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.0.name())
    }
}

impl<'de> Deserialize<'de> for TaskFilterName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(TaskFilterName).map_err(serde::de::Error::custom)
    }
}

/// A [`TaskFilter`] that (de)serializes as its display name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskFilterName(pub TaskFilter);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskExample {
    pub subject: String,
    pub corrupted_subject: String,
    pub relation: Relation,
    pub clean: Vec<usize>,
    pub corrupted: Vec<usize>,
    /// First token of the clean subject's attribute.
    pub target: usize,
    /// First token of the corrupted subject's attribute.
    pub corrupted_target: usize,
    /// Every token of the clean attribute, for exact-match decoding.
    pub attribute: Vec<usize>,
    pub subject_span: Range<usize>,
    pub relation_span: Range<usize>,
    pub knowledge_type: KnowledgeType,
    pub frequency: u32,
    pub band: FrequencyBand,
}

impl TaskExample {
    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    /// Structural invariants: equal lengths, disjoint in-bounds spans, differences only in the subject.
    pub fn check(&self, vocab_size: usize) -> Result<()> {
        let n = self.clean.len();
        let ok = n == self.corrupted.len()
            && self.subject_span.end <= self.relation_span.start
            && self.relation_span.end <= n
            && self.subject_span.start < self.subject_span.end
            && self.relation_span.start < self.relation_span.end
            && (0..n).all(|i| self.subject_span.contains(&i) || self.clean[i] == self.corrupted[i])
            && self.target < vocab_size
            && self.corrupted_target < vocab_size;
        if ok {
            Ok(())
        } else {
            Err(Error::Corpus(format!("malformed task example for {}", self.subject)))
        }
    }
}

/// `<sep> subject relation-phrase` with the subject and relation spans.
pub fn query_tokens(
    tok: &Tokenizer,
    subject: &str,
    relation: Relation,
) -> Result<(Vec<usize>, Range<usize>, Range<usize>)> {
    let phrase = relation
        .query_phrase()
        .ok_or_else(|| Error::Corpus(format!("{relation} is not a recall task relation")))?;
    let s = tok.encode_known(subject)?;
    let r = tok.encode_known(phrase)?;
    let mut ids = Vec::with_capacity(1 + s.len() + r.len());
    ids.push(SEP);
    ids.extend(&s);
    let subject_span = 1..1 + s.len();
    ids.extend(&r);
    let relation_span = subject_span.end..ids.len();
    Ok((ids, subject_span, relation_span))
}

const CORRUPTION_TRIES: usize = 200;

fn build_example(
    tok: &Tokenizer,
    entity: &EntityProfile,
    relation: Relation,
    pool: &[EntityProfile],
    rng: &mut impl Rng,
) -> Result<Option<TaskExample>> {
    let subject = entity.subject();
    let (clean, subject_span, relation_span) = query_tokens(tok, &subject, relation)?;
    let attribute = tok.encode_known(entity.attribute(relation))?;
    let target = attribute[0];
    let subject_len = subject_span.len();
    for _ in 0..CORRUPTION_TRIES {
        let other = &pool[rng.gen_range(0..pool.len())];
        if other.name == entity.name {
            continue;
        }
        let other_subject = other.subject();
        let s = tok.encode_known(&other_subject)?;
        if s.len() != subject_len {
            continue;
        }
        let corrupted_target = tok
            .id(first_word(other.attribute(relation)))
            .ok_or_else(|| Error::Corpus(format!("attribute of {other_subject} not in vocabulary")))?;
        // Identical first tokens would make the logit difference vacuous.
        if corrupted_target == target {
            continue;
        }
        let mut corrupted = clean.clone();
        corrupted[subject_span.clone()].copy_from_slice(&s);
        return Ok(Some(TaskExample {
            subject,
            corrupted_subject: other_subject,
            relation,
            clean,
            corrupted,
            target,
            corrupted_target,
            attribute,
            subject_span,
            relation_span,
            knowledge_type: entity.knowledge_type,
            frequency: entity.frequency,
            band: FrequencyBand::of(entity.frequency),
        }));
    }
    Ok(None)
}

/// Sample `k` recall examples for `relation` from entities matching `filter`.
///
/// Corrupted subjects come from `pool` (the training corpus's entities) with
/// the same subject token length. Entities without a usable corruption are
/// skipped with a warning and replaced by further candidates.
pub fn make_task_examples(
    tok: &Tokenizer,
    entities: &[EntityProfile],
    pool: &[EntityProfile],
    relation: Relation,
    filter: TaskFilter,
    k: usize,
    rng: &mut impl Rng,
) -> Result<Vec<TaskExample>> {
    let mut candidates: Vec<&EntityProfile> = entities.iter().filter(|e| filter.matches(e)).collect();
    if candidates.len() < k {
        return Err(Error::Corpus(format!(
            "{} entities match {filter}, {k} examples requested",
            candidates.len()
        )));
    }
    candidates.shuffle(rng);
    collect(tok, candidates.into_iter().map(|e| (e, relation)), pool, k, rng)
}

fn collect<'a>(
    tok: &Tokenizer,
    pairs: impl Iterator<Item = (&'a EntityProfile, Relation)>,
    pool: &[EntityProfile],
    k: usize,
    rng: &mut impl Rng,
) -> Result<Vec<TaskExample>> {
    if pool.is_empty() {
        return Err(Error::Corpus("empty corruption pool".into()));
    }
    let mut out = Vec::with_capacity(k);
    for (e, r) in pairs {
        if out.len() == k {
            break;
        }
        match build_example(tok, e, r, pool, rng)? {
            Some(x) => out.push(x),
            None => log::warn!("no length-matched corruption for {} ({r}); skipped", e.subject()),
        }
    }
    if out.len() < k {
        log::warn!("only {} of {k} task examples could be built", out.len());
    }
    Ok(out)
}

/// Disjoint validation and test sets for one filter, pooled over `relations`.
///
/// Matching entities are shuffled and split in half by entity; each half yields
/// up to `k` examples drawn from its (entity, relation) pairs in random order.
pub fn make_task_split(
    tok: &Tokenizer,
    entities: &[EntityProfile],
    pool: &[EntityProfile],
    relations: &[Relation],
    filter: TaskFilter,
    k: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<TaskExample>, Vec<TaskExample>)> {
    if relations.is_empty() {
        return Err(Error::Config("no task relations".into()));
    }
    let mut candidates: Vec<&EntityProfile> = entities.iter().filter(|e| filter.matches(e)).collect();
    if candidates.len() < 2 {
        return Err(Error::Corpus(format!("fewer than two entities match {filter}")));
    }
    candidates.shuffle(rng);
    let half = candidates.len() / 2;
    let mut sets = Vec::with_capacity(2);
    for part in [&candidates[..half], &candidates[half..]] {
        let mut pairs: Vec<(&EntityProfile, Relation)> = part
            .iter()
            .flat_map(|&e| relations.iter().map(move |&r| (e, r)))
            .collect();
        pairs.shuffle(rng);
        sets.push(collect(tok, pairs.into_iter(), pool, k, rng)?);
    }
    let test = sets.pop().expect("two sets");
    let val = sets.pop().expect("two sets");
    Ok((val, test))
}
