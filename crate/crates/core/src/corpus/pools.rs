// SPDX-License-Identifier: MIT OR Apache-2.0

//! Static name and attribute pools.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];
pub const FIRST_YEAR: u32 = 1900;
pub const LAST_YEAR: u32 = 2025;
pub const DAYS: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    BirthDate,
    City,
    Major,
    University,
    Company,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::BirthDate,
        Relation::City,
        Relation::Major,
        Relation::University,
        Relation::Company,
    ];

    /// Relations usable as factual-recall tasks. Birth dates start with a day
    /// number and universities mostly with "University", so their first
    /// tokens carry almost no entity information.
    pub const TASKS: [Relation; 3] = [Relation::City, Relation::Major, Relation::Company];

    pub fn name(self) -> &'static str {
        match self {
            Relation::BirthDate => "birth_date",
            Relation::City => "city",
            Relation::Major => "major",
            Relation::University => "university",
            Relation::Company => "company",
        }
    }

    pub fn index(self) -> usize {
        Relation::ALL.iter().position(|&r| r == self).expect("listed")
    }

    pub fn is_task(self) -> bool {
        Relation::TASKS.contains(&self)
    }

    /// Cloze prompt that follows the subject name in a recall query.
    pub fn query_phrase(self) -> Option<&'static str> {
        match self {
            Relation::City => Some("lives in the city of"),
            Relation::Major => Some("majors in the field of"),
            Relation::Company => Some("works for the company of"),
            _ => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Corpus(format!("unknown relation `{s}`")))
    }
}

fn lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// Name components and per-relation attribute values.
#[derive(Clone, Debug)]
pub struct Pools {
    pub first: Vec<String>,
    pub middle: Vec<String>,
    pub last: Vec<String>,
    pub cities: Vec<String>,
    pub majors: Vec<String>,
    pub companies: Vec<String>,
    pub universities: Vec<String>,
}

impl Pools {
    /// The bundled pools.
    pub fn builtin() -> Self {
        Self {
            first: lines(include_str!("../../data/first_names.txt")),
            middle: lines(include_str!("../../data/middle_names.txt")),
            last: lines(include_str!("../../data/last_names.txt")),
            cities: lines(include_str!("../../data/cities.txt")),
            majors: lines(include_str!("../../data/majors.txt")),
            companies: lines(include_str!("../../data/companies.txt")),
            universities: lines(include_str!("../../data/universities.txt")),
        }
    }

    /// Number of distinct full names.
    pub fn name_capacity(&self) -> u128 {
        self.first.len() as u128 * self.middle.len() as u128 * self.last.len() as u128
    }

    /// Attribute pool of a relation; `None` for birth dates, which are generated.
    pub fn attributes(&self, relation: Relation) -> Option<&[String]> {
        match relation {
            Relation::BirthDate => None,
            Relation::City => Some(&self.cities),
            Relation::Major => Some(&self.majors),
            Relation::Company => Some(&self.companies),
            Relation::University => Some(&self.universities),
        }
    }

    /// Number of possible attribute values.
    pub fn attribute_count(&self, relation: Relation) -> usize {
        match self.attributes(relation) {
            Some(p) => p.len(),
            None => (DAYS as usize) * MONTHS.len() * (LAST_YEAR - FIRST_YEAR + 1) as usize,
        }
    }

    pub fn sample_attribute(&self, relation: Relation, rng: &mut impl Rng) -> String {
        match self.attributes(relation) {
            Some(p) => p[rng.gen_range(0..p.len())].clone(),
            None => format_birth_date(
                rng.gen_range(1..=DAYS),
                rng.gen_range(0..12),
                rng.gen_range(FIRST_YEAR..=LAST_YEAR),
            ),
        }
    }
}

/// "5 December, 1935" style.
pub fn format_birth_date(day: u32, month: usize, year: u32) -> String {
    format!("{day} {}, {year}", MONTHS[month])
}
