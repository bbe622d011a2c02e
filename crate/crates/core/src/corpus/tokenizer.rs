// SPDX-License-Identifier: MIT OR Apache-2.0

//! Word-level tokenizer.
//!
//! Text is split on whitespace, and each of `, . ; : ! ? ( )` becomes its own
//! token. Apostrophes, hyphens and ampersands stay inside words, so
//! "McDonald's" and "Winston-Salem" are single tokens.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const SEP: usize = 2;
pub const SPECIALS: [&str; 3] = ["<pad>", "<unk>", "<sep>"];

const PUNCT: &[char] = &[',', '.', ';', ':', '!', '?', '(', ')'];

/// Split text into word tokens.
pub fn split_words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in chunk.char_indices() {
            if PUNCT.contains(&c) {
                if start < i {
                    out.push(&chunk[start..i]);
                }
                out.push(&chunk[i..i + c.len_utf8()]);
                start = i + c.len_utf8();
            }
        }
        if start < chunk.len() {
            out.push(&chunk[start..]);
        }
    }
    out
}

/// First word of an attribute value, the token a recall query is scored on.
pub fn first_word(attribute: &str) -> &str {
    split_words(attribute).first().copied().unwrap_or("")
}

/// `(distinct first words, pool size)` of an attribute pool.
pub fn first_token_ratio(pool: &[String]) -> (usize, usize) {
    let distinct: BTreeSet<&str> = pool.iter().map(|a| first_word(a)).collect();
    (distinct.len(), pool.len())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tokenizer {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

/// Encoded text plus the number of words that fell back to `<unk>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoded {
    pub ids: Vec<usize>,
    pub unknown: usize,
}

impl Tokenizer {
    /// Vocabulary: the special tokens, then every distinct word in sorted order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut set = BTreeSet::new();
        let mut any = false;
        for t in texts {
            any = true;
            for w in split_words(t) {
                set.insert(w);
            }
        }
        if !any || set.is_empty() {
            return Err(Error::Corpus("cannot build a vocabulary from an empty corpus".into()));
        }
        let words: Vec<String> = SPECIALS
            .iter()
            .copied()
            .chain(set.into_iter().filter(|w| !SPECIALS.contains(w)))
            .map(String::from)
            .collect();
        Ok(Self::from_words(words))
    }

    fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self { words, index }
    }

    /// One word per line, ids in line order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for w in &self.words {
            s.push_str(w);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let words: Vec<String> = text.lines().map(String::from).collect();
        if words.len() < SPECIALS.len() || words[..SPECIALS.len()] != SPECIALS {
            return Err(Error::format("vocabulary", "missing special tokens"));
        }
        let t = Self::from_words(words);
        if t.index.len() != t.words.len() {
            return Err(Error::format("vocabulary", "duplicate words"));
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        self.words.get(id).map(String::as_str).unwrap_or(SPECIALS[UNK])
    }

    pub fn encode(&self, text: &str) -> Encoded {
        let mut unknown = 0;
        let ids = split_words(text)
            .into_iter()
            .map(|w| {
                self.id(w).unwrap_or_else(|| {
                    unknown += 1;
                    UNK
                })
            })
            .collect();
        Encoded { ids, unknown }
    }

    /// Encode, failing on any out-of-vocabulary word.
    pub fn encode_known(&self, text: &str) -> Result<Vec<usize>> {
        let e = self.encode(text);
        if e.unknown > 0 {
            return Err(Error::Corpus(format!("{} unknown words in `{text}`", e.unknown)));
        }
        Ok(e.ids)
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter().map(|&i| self.word(i)).collect::<Vec<_>>().join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation() {
        assert_eq!(split_words("lives in the city of").len(), 5);
        assert_eq!(
            split_words("in Newport News, VA."),
            vec!["in", "Newport", "News", ",", "VA", "."]
        );
        assert_eq!(split_words("St. Louis"), vec!["St", ".", "Louis"]);
        assert_eq!(split_words("McDonald's AT&T Winston-Salem"), vec!["McDonald's", "AT&T", "Winston-Salem"]);
        assert_eq!(first_word("Newport News, VA"), "Newport");
    }

    #[test]
    fn unknown_words_are_counted() {
        let t = Tokenizer::build(["a b c."]).unwrap();
        let e = t.encode("a z c q");
        assert_eq!(e.unknown, 2);
        assert_eq!(e.ids[1], UNK);
        assert!(t.encode_known("a z").is_err());
        assert_eq!(t.decode(&t.encode_known("c a .").unwrap()), "c a .");
    }

    #[test]
    fn vocabulary_text_round_trip() {
        let t = Tokenizer::build(["x y, z", "y w"]).unwrap();
        assert_eq!(Tokenizer::from_text(&t.to_text()).unwrap(), t);
        assert_eq!(t.id("<sep>"), Some(SEP));
        assert!(Tokenizer::build(Vec::<&str>::new()).is_err());
    }
}
