// SPDX-License-Identifier: MIT OR Apache-2.0

//! Whole-model next-token and exact-match accuracy on recall queries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::with_pool;
use crate::corpus::TaskExample;
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracies {
    pub first_token: f64,
    pub query: f64,
}

fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `(first token correct, greedy decode matches the whole attribute)`.
pub fn example_accuracy(model: &Model, ex: &TaskExample) -> Result<(bool, bool)> {
    if ex.attribute.is_empty() {
        return Err(Error::Contract(format!("empty attribute for {}", ex.subject)));
    }
    let mut seq = ex.clean.clone();
    let mut first = false;
    for (i, &want) in ex.attribute.iter().enumerate() {
        let next = argmax(&model.last_logits(&seq)?);
        if i == 0 {
            first = next == want;
        }
        if next != want {
            return Ok((first, false));
        }
        seq.push(next);
    }
    Ok((first, true))
}

pub fn whole_model_accuracies(model: &Model, examples: &[TaskExample], jobs: usize) -> Result<Accuracies> {
    if examples.is_empty() {
        return Err(Error::Contract("accuracy of an empty example set".into()));
    }
    let flags: Vec<Result<(bool, bool)>> =
        with_pool(jobs, || examples.par_iter().map(|ex| example_accuracy(model, ex)).collect())?;
    let (mut f, mut q) = (0usize, 0usize);
    for r in flags {
        let (a, b) = r?;
        f += a as usize;
        q += b as usize;
    }
    let n = examples.len() as f64;
    Ok(Accuracies {
        first_token: f as f64 / n,
        query: q as f64 / n,
    })
}
