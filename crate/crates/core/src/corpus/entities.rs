// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pools::{Pools, Relation};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeType {
    /// Subject already known from the base stage; the attributes are new.
    Relevant,
    /// Subject never seen before.
    CompletelyNew,
}

impl KnowledgeType {
    pub fn label(self) -> &'static str {
        match self {
            KnowledgeType::Relevant => "K_rel",
            KnowledgeType::CompletelyNew => "K_compl",
        }
    }
}

impl fmt::Display for KnowledgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KnowledgeType::Relevant => "relevant",
            KnowledgeType::CompletelyNew => "completely_new",
        })
    }
}

impl FromStr for KnowledgeType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relevant" | "K_rel" => Ok(KnowledgeType::Relevant),
            "completely_new" | "K_compl" => Ok(KnowledgeType::CompletelyNew),
            _ => Err(Error::Corpus(format!("unknown knowledge type `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Name {
    pub first: String,
    pub middle: String,
    pub last: String,
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.first, self.middle, self.last)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: Relation,
    pub attribute: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityProfile {
    pub name: Name,
    /// One triple per relation, in [`Relation::ALL`] order.
    pub triples: Vec<Triple>,
    pub knowledge_type: KnowledgeType,
    pub frequency: u32,
}

impl EntityProfile {
    pub fn subject(&self) -> String {
        self.name.to_string()
    }

    pub fn attribute(&self, relation: Relation) -> &str {
        &self.triples[relation.index()].attribute
    }
}

/// Truncated discrete exponential over `[min, max]`: `P(k + 1) / P(k) = rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqParams {
    pub rate: f64,
    pub min: u32,
    pub max: u32,
}

impl Default for FreqParams {
    /// Rate chosen so the top frequency 27 has probability about 1 / 50,000.
    fn default() -> Self {
        Self {
            rate: 0.69,
            min: 1,
            max: 27,
        }
    }
}

impl FreqParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::Config(format!("frequency rate {} outside [0, 1]", self.rate)));
        }
        if self.min < 1 || self.min > self.max {
            return Err(Error::Config(format!(
                "frequency range [{}, {}] is empty or starts below 1",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Probability of each frequency `min..=max`.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut w: Vec<f64> = (0..=self.max - self.min).map(|i| self.rate.powi(i as i32)).collect();
        // 0^0 is 1 in powi, so rate = 0 already puts all mass on `min`.
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|p| *p /= z);
        w
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let probs = self.probabilities();
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.min + i as u32;
            }
        }
        self.max
    }
}

/// `|K_rel| : |K_compl|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRatio {
    pub relevant: u32,
    pub completely_new: u32,
}

impl Default for TypeRatio {
    fn default() -> Self {
        Self {
            relevant: 1,
            completely_new: 4,
        }
    }
}

impl TypeRatio {
    pub fn relevant_count(&self, n: usize) -> usize {
        let total = (self.relevant + self.completely_new) as f64;
        if total == 0.0 {
            return 0;
        }
        (n as f64 * self.relevant as f64 / total).round() as usize
    }
}

fn sample_name(pools: &Pools, rng: &mut impl Rng) -> Name {
    Name {
        first: pools.first[rng.gen_range(0..pools.first.len())].clone(),
        middle: pools.middle[rng.gen_range(0..pools.middle.len())].clone(),
        last: pools.last[rng.gen_range(0..pools.last.len())].clone(),
    }
}

/// Draw `n` entities with unique names that avoid `reserved`.
///
/// The first `ratio.relevant_count(n)` entities are [`KnowledgeType::Relevant`].
pub fn generate_entities(
    pools: &Pools,
    n: usize,
    ratio: TypeRatio,
    freq: FreqParams,
    rng: &mut impl Rng,
    reserved: &HashSet<Name>,
) -> Result<Vec<EntityProfile>> {
    freq.validate()?;
    if n == 0 {
        return Err(Error::Corpus("n_entities must be at least 1".into()));
    }
    let capacity = pools.name_capacity();
    if (n + reserved.len()) as u128 > capacity {
        return Err(Error::Corpus(format!(
            "{n} entities (+{} reserved names) exceed the {capacity} unique names available",
            reserved.len()
        )));
    }
    let n_rel = ratio.relevant_count(n);
    let mut seen: HashSet<Name> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let name = sample_name(pools, rng);
        if reserved.contains(&name) || !seen.insert(name.clone()) {
            continue;
        }
        let subject = name.to_string();
        let triples = Relation::ALL
            .iter()
            .map(|&relation| Triple {
                subject: subject.clone(),
                relation,
                attribute: pools.sample_attribute(relation, rng),
            })
            .collect();
        let knowledge_type = if out.len() < n_rel {
            KnowledgeType::Relevant
        } else {
            KnowledgeType::CompletelyNew
        };
        out.push(EntityProfile {
            name,
            triples,
            knowledge_type,
            frequency: freq.sample(rng),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_ratio_for_five() {
        let pools = Pools::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = generate_entities(&pools, 5, TypeRatio::default(), FreqParams::default(), &mut rng, &HashSet::new())
            .unwrap();
        let rel = e.iter().filter(|x| x.knowledge_type == KnowledgeType::Relevant).count();
        assert_eq!((rel, e.len() - rel), (1, 4));
    }

    #[test]
    fn zero_rate_gives_all_ones() {
        let f = FreqParams {
            rate: 0.0,
            ..FreqParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..500).all(|_| f.sample(&mut rng) == 1));
    }

    #[test]
    fn default_rate_puts_about_one_in_fifty_thousand_on_27() {
        let p = FreqParams::default().probabilities();
        assert_eq!(p.len(), 27);
        let top = p[26];
        assert!((1.5e-5..2.5e-5).contains(&top), "{top}");
    }

    #[test]
    fn over_capacity_is_rejected() {
        let mut pools = Pools::builtin();
        pools.first.truncate(1);
        pools.middle.truncate(1);
        pools.last.truncate(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let err = generate_entities(&pools, 3, TypeRatio::default(), FreqParams::default(), &mut rng, &HashSet::new());
        assert!(err.is_err());
    }
}
