// SPDX-License-Identifier: MIT OR Apache-2.0

//! Logit-difference loss `L = -(logit[target] - logit[corrupted_target])`.

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

fn check(vocab: usize, target: usize, corrupted_target: usize) -> Result<()> {
    if target >= vocab || corrupted_target >= vocab {
        return Err(Error::Contract(format!(
            "target ids {target}/{corrupted_target} outside vocabulary of {vocab}"
        )));
    }
    Ok(())
}

/// Loss on last-position logits.
pub fn attribution_loss(logits: &[f32], target: usize, corrupted_target: usize) -> Result<f32> {
    check(logits.len(), target, corrupted_target)?;
    Ok(-(logits[target] - logits[corrupted_target]))
}

/// Tape version over `[1, vocab]` logits.
pub fn logit_difference_loss(tape: &mut Tape, logits: Var, target: usize, corrupted_target: usize) -> Result<Var> {
    let shape = tape.shape(logits).to_vec();
    if shape.len() != 2 || shape[0] != 1 {
        return Err(Error::shape("logit_difference_loss", format!("expected [1, vocab], got {shape:?}")));
    }
    let vocab = shape[1];
    check(vocab, target, corrupted_target)?;
    let mut sel = Tensor::zeros(&[1, vocab]);
    sel.data_mut()[target] -= 1.0;
    sel.data_mut()[corrupted_target] += 1.0;
    let sel = tape.constant(sel);
    let prod = tape.mul(logits, sel)?;
    Ok(tape.sum(prod))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let l = [0.5f32, 2.0, 0.0];
        assert_eq!(attribution_loss(&l, 1, 0).unwrap(), -1.5);
        assert_eq!(attribution_loss(&l, 1, 1).unwrap(), 0.0);
        assert!(attribution_loss(&l, 3, 0).is_err());
    }

    #[test]
    fn tape_version_matches() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::new(vec![1, 3], vec![0.5, 2.0, 0.0]).unwrap(), false);
        let l = logit_difference_loss(&mut t, x, 1, 0).unwrap();
        assert_eq!(t.value(l).item().unwrap(), -1.5);
    }
}
