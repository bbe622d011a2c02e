// SPDX-License-Identifier: MIT OR Apache-2.0

//! Biography templates and corpus rendering.

use rand::seq::SliceRandom;
use rand::Rng;

use super::entities::EntityProfile;
use super::pools::Relation;
use crate::error::{Error, Result};

pub const SUBJECT: &str = "{s}";
pub const ATTRIBUTE: &str = "{a}";

/// Sentence templates per relation, in [`Relation::ALL`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Templates {
    by_relation: Vec<Vec<String>>,
}

impl Templates {
    /// Parse `relation<TAB>template` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut by_relation = vec![Vec::new(); Relation::ALL.len()];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (rel, tpl) = line
                .split_once('\t')
                .ok_or_else(|| Error::Corpus(format!("template line {}: missing tab", i + 1)))?;
            let rel: Relation = rel.trim().parse()?;
            by_relation[rel.index()].push(tpl.trim().to_string());
        }
        let t = Self { by_relation };
        t.validate()?;
        Ok(t)
    }

    /// The bundled templates, keeping the first `per_relation` of each relation.
    pub fn builtin(per_relation: usize) -> Result<Self> {
        let all = Self::parse(include_str!("../../data/templates.txt"))?;
        all.truncated(per_relation)
    }

    pub fn truncated(&self, per_relation: usize) -> Result<Self> {
        for (r, list) in Relation::ALL.iter().zip(&self.by_relation) {
            if per_relation > list.len() {
                return Err(Error::Config(format!(
                    "{per_relation} templates requested for {r}, only {} available",
                    list.len()
                )));
            }
        }
        let t = Self {
            by_relation: self
                .by_relation
                .iter()
                .map(|l| l[..per_relation].to_vec())
                .collect(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_lists(by_relation: Vec<Vec<String>>) -> Result<Self> {
        if by_relation.len() != Relation::ALL.len() {
            return Err(Error::Corpus(format!(
                "expected template lists for {} relations, got {}",
                Relation::ALL.len(),
                by_relation.len()
            )));
        }
        let t = Self { by_relation };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (r, list) in Relation::ALL.iter().zip(&self.by_relation) {
            if list.is_empty() {
                return Err(Error::Corpus(format!("relation {r} has no templates")));
            }
            for t in list {
                if t.matches(SUBJECT).count() != 1 || t.matches(ATTRIBUTE).count() != 1 {
                    return Err(Error::Corpus(format!(
                        "template `{t}` for {r} must contain {SUBJECT} and {ATTRIBUTE} exactly once"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn for_relation(&self, r: Relation) -> &[String] {
        &self.by_relation[r.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Relation, &str)> {
        Relation::ALL
            .iter()
            .zip(&self.by_relation)
            .flat_map(|(&r, l)| l.iter().map(move |t| (r, t.as_str())))
    }
}

pub fn fill(template: &str, subject: &str, attribute: &str) -> String {
    template.replace(SUBJECT, subject).replace(ATTRIBUTE, attribute)
}

/// One biography segment per appearance of each entity, covering all relations.
pub fn render_corpus(entities: &[EntityProfile], templates: &Templates, rng: &mut impl Rng) -> Result<Vec<String>> {
    render_relations(entities, &Relation::ALL, templates, rng)
}

/// Like [`render_corpus`] but each segment only states `relations`.
///
/// Every appearance samples its templates independently and shuffles its
/// sentence order independently.
pub fn render_relations(
    entities: &[EntityProfile],
    relations: &[Relation],
    templates: &Templates,
    rng: &mut impl Rng,
) -> Result<Vec<String>> {
    templates.validate()?;
    if relations.is_empty() {
        return Err(Error::Corpus("no relations to render".into()));
    }
    let total: u64 = entities.iter().map(|e| e.frequency as u64).sum();
    let mut segments = Vec::with_capacity(total as usize);
    let mut order: Vec<usize> = (0..relations.len()).collect();
    for e in entities {
        let subject = e.subject();
        for _ in 0..e.frequency {
            let sentences: Vec<String> = relations
                .iter()
                .map(|&r| {
                    let list = templates.for_relation(r);
                    let t = &list[rng.gen_range(0..list.len())];
                    fill(t, &subject, e.attribute(r))
                })
                .collect();
            order.shuffle(rng);
            let seg: Vec<&str> = order.iter().map(|&i| sentences[i].as_str()).collect();
            segments.push(seg.join(" "));
        }
    }
    debug_assert_eq!(segments.len() as u64, total);
    Ok(segments)
}
