// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-checkpoint metrics table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Phase;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub stage: Phase,
    pub filter: String,
    pub hit_at_10: f64,
    pub circuit_entropy: f64,
    pub jaccard_edges_vs_final: f64,
    pub jaccard_nodes_vs_final: f64,
    /// Input row, then layers `0..n_layers - 1`.
    pub activation_ratios: Vec<f64>,
    /// `[mover, relation, mixture]` per layer.
    pub head_counts: Vec<[usize; 3]>,
    pub first_token_accuracy: f64,
    pub query_accuracy: f64,
}

impl MetricsRow {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            self.hit_at_10,
            self.jaccard_edges_vs_final,
            self.jaccard_nodes_vs_final,
            self.first_token_accuracy,
            self.query_accuracy,
        ];
        if unit
            .iter()
            .chain(&self.activation_ratios)
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Numerical(format!(
                "metric outside [0, 1] at {} epoch {} ({})",
                self.stage, self.epoch, self.filter
            )));
        }
        if !(self.circuit_entropy >= 0.0) {
            return Err(Error::Numerical(format!("negative or undefined entropy at epoch {}", self.epoch)));
        }
        Ok(())
    }
}

pub fn csv_header(n_layers: usize) -> String {
    let mut cols: Vec<String> = [
        "epoch",
        "stage",
        "filter",
        "hit_at_10",
        "circuit_entropy",
        "jaccard_edges_vs_final",
        "jaccard_nodes_vs_final",
        "ratio_input",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((0..n_layers.saturating_sub(1)).map(|l| format!("ratio_l{l}")));
    for l in 0..n_layers {
        cols.extend(["mover", "relation", "mixture"].iter().map(|k| format!("{k}_l{l}")));
    }
    cols.push("first_token_accuracy".into());
    cols.push("query_accuracy".into());
    cols.join(",")
}

/// CSV with `# key: value` comment lines, a column header, then one row per entry.
pub fn metrics_csv(rows: &[MetricsRow], n_layers: usize, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    s.push_str(&csv_header(n_layers));
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.epoch,
            r.stage,
            r.filter,
            r.hit_at_10,
            r.circuit_entropy,
            r.jaccard_edges_vs_final,
            r.jaccard_nodes_vs_final
        );
        for v in &r.activation_ratios {
            let _ = write!(s, ",{v:.6}");
        }
        for c in &r.head_counts {
            let _ = write!(s, ",{},{},{}", c[0], c[1], c[2]);
        }
        let _ = writeln!(s, ",{:.6},{:.6}", r.first_token_accuracy, r.query_accuracy);
    }
    s
}
