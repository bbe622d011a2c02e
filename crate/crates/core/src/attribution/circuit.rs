// SPDX-License-Identifier: MIT OR Apache-2.0

//! Circuits: the top-`n` edges by absolute score.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::eap_ig::{parse_edge, EdgeScores};
use crate::error::{Error, Result};
use crate::graph::{CompGraph, NodeId};

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_layers: usize,
    pub n_heads: usize,
    /// Edge indices in canonical order.
    pub edges: Vec<usize>,
    /// Scores of `edges`, same order.
    pub scores: Vec<f64>,
    /// Endpoints of `edges`, in graph node order.
    pub nodes: Vec<NodeId>,
    pub provenance: String,
}

impl Circuit {
    pub fn from_edges(graph: &CompGraph, mut edges: Vec<usize>, all_scores: &[f64], provenance: &str) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut nodes = BTreeSet::new();
        for &e in &edges {
            let id = graph.edge(e);
            nodes.insert(graph.node_index(&id.source).expect("graph node"));
            nodes.insert(graph.node_index(&id.destination).expect("graph node"));
        }
        Self {
            n_layers: graph.n_layers(),
            n_heads: graph.n_heads(),
            scores: edges.iter().map(|&e| all_scores[e]).collect(),
            nodes: nodes.into_iter().map(|i| graph.nodes()[i]).collect(),
            edges,
            provenance: provenance.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Membership flags over all edges of `graph`.
    pub fn mask(&self, graph: &CompGraph) -> Result<Vec<bool>> {
        self.check_graph(graph)?;
        let mut m = vec![false; graph.n_edges()];
        for &e in &self.edges {
            m[e] = true;
        }
        Ok(m)
    }

    pub fn check_graph(&self, graph: &CompGraph) -> Result<()> {
        if graph.n_layers() != self.n_layers || graph.n_heads() != self.n_heads {
            return Err(Error::Config(format!(
                "circuit for {}x{} graph used with a {}x{} model",
                self.n_layers,
                self.n_heads,
                graph.n_layers(),
                graph.n_heads()
            )));
        }
        if let Some(&e) = self.edges.iter().find(|&&e| e >= graph.n_edges()) {
            return Err(Error::UnknownEdge(format!("edge index {e}")));
        }
        Ok(())
    }

    /// Tab-separated `source destination channel score`, canonical order.
    pub fn to_text(&self, graph: &CompGraph, header: &[String]) -> String {
        edge_table(graph, self.edges.iter().copied().zip(self.scores.iter().copied()), header)
    }

    pub fn from_text(graph: &CompGraph, text: &str, provenance: &str) -> Result<Self> {
        let rows = parse_table(graph, text)?;
        let mut all = vec![0.0; graph.n_edges()];
        for &(e, s) in &rows {
            all[e] = s;
        }
        Ok(Self::from_edges(graph, rows.into_iter().map(|(e, _)| e).collect(), &all, provenance))
    }
}

/// The `n` edges with the largest `|score|`; ties go to the earlier canonical edge.
pub fn extract_circuit(graph: &CompGraph, scores: &EdgeScores, n: usize) -> Result<Circuit> {
    scores.validate(graph)?;
    if n > graph.n_edges() {
        return Err(Error::Contract(format!("{n} edges requested from a graph of {}", graph.n_edges())));
    }
    let order = ranked_edges(&scores.scores);
    let provenance = format!("{} top {n}", scores.meta.checkpoint);
    Ok(Circuit::from_edges(graph, order[..n].to_vec(), &scores.scores, &provenance))
}

/// Edge indices sorted by decreasing `|score|`, ties by index.
pub fn ranked_edges(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
    order
}

pub(crate) fn edge_table(graph: &CompGraph, rows: impl Iterator<Item = (usize, f64)>, header: &[String]) -> String {
    let mut s = String::new();
    for h in header {
        let _ = writeln!(s, "# {h}");
    }
    s.push_str("source\tdestination\tchannel\tscore\n");
    for (e, score) in rows {
        let id = graph.edge(e);
        let _ = writeln!(s, "{}\t{}\t{}\t{:e}", id.source, id.destination, id.channel, score);
    }
    s
}

pub(crate) fn parse_table(graph: &CompGraph, text: &str) -> Result<Vec<(usize, f64)>> {
    let mut rows = Vec::new();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some("source\tdestination\tchannel\tscore") {
        return Err(Error::format("edge table", "missing column header"));
    }
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::format("edge table", format!("row {} has {} columns", i + 1, cols.len())));
        }
        let e = parse_edge(graph, cols[0], cols[1], cols[2])?;
        let s: f64 = cols[3]
            .parse()
            .map_err(|_| Error::format("edge table", format!("row {}: bad score", i + 1)))?;
        rows.push((e, s));
    }
    Ok(rows)
}

/// Full score table, canonical order.
pub fn scores_to_text(graph: &CompGraph, scores: &EdgeScores, header: &[String]) -> String {
    edge_table(graph, scores.scores.iter().copied().enumerate(), header)
}

pub fn scores_from_text(graph: &CompGraph, text: &str, meta: super::eap_ig::ScoreMeta) -> Result<EdgeScores> {
    let rows = parse_table(graph, text)?;
    if rows.len() != graph.n_edges() || rows.iter().enumerate().any(|(i, &(e, _))| i != e) {
        return Err(Error::format("edge scores", "rows must cover every edge in canonical order"));
    }
    Ok(EdgeScores {
        scores: rows.into_iter().map(|(_, s)| s).collect(),
        meta,
    })
}
