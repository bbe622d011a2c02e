// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cross-band circuit transfer.

use crate::attribution::{evaluate_circuit, Circuit, PreparedSet};
use crate::error::{Error, Result};
use crate::model::Model;

/// `matrix[i][j]`: Hit@10 of the circuit found on band `i` over the test set of band `j`.
pub fn transfer_matrix(
    model: &Model,
    circuits: &[Circuit],
    tests: &[PreparedSet<'_>],
    jobs: usize,
) -> Result<Vec<Vec<f64>>> {
    if circuits.len() != tests.len() {
        return Err(Error::Contract(format!(
            "{} circuits for {} test sets",
            circuits.len(),
            tests.len()
        )));
    }
    circuits
        .iter()
        .map(|c| {
            tests
                .iter()
                .map(|t| Ok(evaluate_circuit(model, c, t, jobs)?.hit_at_10))
                .collect()
        })
        .collect()
}
