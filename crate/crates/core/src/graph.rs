// SPDX-License-Identifier: MIT OR Apache-2.0

//! Computational graph of a decoder-only transformer.
//!
//! Nodes are the input embedding, every attention head, every MLP and the
//! logits read-out. An edge carries one upstream node's residual-stream
//! contribution into one downstream read point; attention heads read through
//! three separate channels (query, key, value).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    Input,
    Head { layer: usize, head: usize },
    Mlp { layer: usize },
    Logits,
}

/// Which read point of the destination an edge feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    Q,
    K,
    V,
    /// The single read of an MLP or of the logits.
    In,
}

impl Channel {
    pub const QKV: [Channel; 3] = [Channel::Q, Channel::K, Channel::V];

    pub fn qkv_index(self) -> Option<usize> {
        match self {
            Channel::Q => Some(0),
            Channel::K => Some(1),
            Channel::V => Some(2),
            Channel::In => None,
        }
    }
}

/// Layer position of a node, with sentinels for the two ends of the graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerIndex {
    Input,
    Block(usize),
    Logits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub source: NodeId,
    pub destination: NodeId,
    pub channel: Channel,
}

pub fn layer_of(node: NodeId) -> LayerIndex {
    match node {
        NodeId::Input => LayerIndex::Input,
        NodeId::Head { layer, .. } | NodeId::Mlp { layer } => LayerIndex::Block(layer),
        NodeId::Logits => LayerIndex::Logits,
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Input => write!(f, "input"),
            NodeId::Head { layer, head } => write!(f, "a{layer}.h{head}"),
            NodeId::Mlp { layer } => write!(f, "m{layer}"),
            NodeId::Logits => write!(f, "logits"),
        }
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::format("node id", format!("cannot parse `{s}`"));
        match s {
            "input" => Ok(NodeId::Input),
            "logits" => Ok(NodeId::Logits),
            _ if s.starts_with('a') => {
                let (l, h) = s[1..].split_once(".h").ok_or_else(bad)?;
                Ok(NodeId::Head {
                    layer: l.parse().map_err(|_| bad())?,
                    head: h.parse().map_err(|_| bad())?,
                })
            }
            _ if s.starts_with('m') => Ok(NodeId::Mlp {
                layer: s[1..].parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Channel::Q => "q",
            Channel::K => "k",
            Channel::V => "v",
            Channel::In => "in",
        };
        f.write_str(s)
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q" => Ok(Channel::Q),
            "k" => Ok(Channel::K),
            "v" => Ok(Channel::V),
            "in" => Ok(Channel::In),
            _ => Err(Error::format("channel", format!("cannot parse `{s}`"))),
        }
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}<{}>", self.source, self.destination, self.channel)
    }
}

/// A destination read point: a node plus the channel it reads through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReadPoint {
    pub node: NodeId,
    pub channel: Channel,
}

/// The full graph `G = <N, E>` of one model shape.
#[derive(Clone, Debug)]
pub struct CompGraph {
    n_layers: usize,
    n_heads: usize,
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
    edge_index: HashMap<EdgeId, usize>,
    node_index: HashMap<NodeId, usize>,
    incoming: HashMap<ReadPoint, Vec<usize>>,
}

impl CompGraph {
    /// Enumerate every node and legal edge in canonical order.
    pub fn build(n_layers: usize, n_heads: usize) -> Self {
        let mut nodes = vec![NodeId::Input];
        for layer in 0..n_layers {
            nodes.extend((0..n_heads).map(|head| NodeId::Head { layer, head }));
            nodes.push(NodeId::Mlp { layer });
        }
        nodes.push(NodeId::Logits);

        // `nodes` is already in computation order, so iterating sources then
        // destinations in that order yields the canonical edge order.
        let mut edges = Vec::new();
        for &source in &nodes {
            for &destination in &nodes {
                if !feeds(source, destination) {
                    continue;
                }
                match destination {
                    NodeId::Head { .. } => {
                        for channel in Channel::QKV {
                            edges.push(EdgeId {
                                source,
                                destination,
                                channel,
                            });
                        }
                    }
                    _ => edges.push(EdgeId {
                        source,
                        destination,
                        channel: Channel::In,
                    }),
                }
            }
        }
        let edge_index = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let node_index = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut incoming: HashMap<ReadPoint, Vec<usize>> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            incoming
                .entry(ReadPoint {
                    node: e.destination,
                    channel: e.channel,
                })
                .or_default()
                .push(i);
        }
        Self {
            n_layers,
            n_heads,
            nodes,
            edges,
            edge_index,
            node_index,
            incoming,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_heads(&self) -> usize {
        self.n_heads
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, i: usize) -> EdgeId {
        self.edges[i]
    }

    pub fn edge_index(&self, e: &EdgeId) -> Option<usize> {
        self.edge_index.get(e).copied()
    }

    pub fn require_edge(&self, e: &EdgeId) -> Result<usize> {
        self.edge_index(e).ok_or_else(|| Error::UnknownEdge(e.to_string()))
    }

    pub fn node_index(&self, n: &NodeId) -> Option<usize> {
        self.node_index.get(n).copied()
    }

    /// Edge indices entering one read point, in canonical order.
    pub fn incoming(&self, node: NodeId, channel: Channel) -> &[usize] {
        self.incoming
            .get(&ReadPoint { node, channel })
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// `n_layers * (n_heads + 1) + 2`.
    pub fn expected_node_count(n_layers: usize, n_heads: usize) -> usize {
        n_layers * (n_heads + 1) + 2
    }

    /// Closed-form edge count, independent of enumeration.
    pub fn expected_edge_count(n_layers: usize, n_heads: usize) -> usize {
        let (l, h) = (n_layers, n_heads);
        let mut total = 3 * h * l + l + 1; // from the input embedding
        for layer in 0..l {
            let later = l - 1 - layer;
            // each head: later heads' q/k/v, MLPs from its own layer on, logits
            total += h * (3 * h * later + (l - layer) + 1);
            // the MLP: later heads' q/k/v, later MLPs, logits
            total += 3 * h * later + later + 1;
        }
        total
    }

    /// Structured text: a header, the node list, then the edge list.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# graph n_layers={} n_heads={}\nnodes {}\n",
            self.n_layers,
            self.n_heads,
            self.nodes.len()
        );
        for n in &self.nodes {
            out.push_str(&format!("{n}\n"));
        }
        out.push_str(&format!("edges {}\n", self.edges.len()));
        for e in &self.edges {
            out.push_str(&format!("{}\t{}\t{}\n", e.source, e.destination, e.channel));
        }
        out
    }
}

/// Whether `source`'s output is read (directly, through the residual) by `destination`.
fn feeds(source: NodeId, destination: NodeId) -> bool {
    use NodeId::*;
    match (source, destination) {
        (_, Input) | (Logits, _) => false,
        (Input, _) => true,
        (_, Logits) => true,
        (Head { layer: a, .. }, Head { layer: b, .. }) => b > a,
        (Head { layer: a, .. }, Mlp { layer: b }) => b >= a,
        (Mlp { layer: a }, Head { layer: b, .. }) => b > a,
        (Mlp { layer: a }, Mlp { layer: b }) => b > a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_layer_one_head_has_eight_edges() {
        let g = CompGraph::build(1, 1);
        assert_eq!(g.nodes().len(), 4);
        assert_eq!(g.n_edges(), 8);
    }

    #[test]
    fn reference_shapes_match_table_counts() {
        let small = CompGraph::build(12, 12);
        assert_eq!((small.nodes().len(), small.n_edges()), (158, 32_491));
        let medium = CompGraph::build(24, 16);
        assert_eq!((medium.nodes().len(), medium.n_edges()), (410, 231_877));
    }

    #[test]
    fn layer_of_sentinels() {
        assert_eq!(layer_of(NodeId::Head { layer: 3, head: 0 }), LayerIndex::Block(3));
        assert_eq!(layer_of(NodeId::Input), LayerIndex::Input);
        assert_eq!(layer_of(NodeId::Mlp { layer: 3 }), LayerIndex::Block(3));
        assert_ne!(layer_of(NodeId::Input), layer_of(NodeId::Logits));
    }

    #[test]
    fn same_layer_heads_are_not_connected_but_feed_their_mlp() {
        let g = CompGraph::build(2, 2);
        let h0 = NodeId::Head { layer: 0, head: 0 };
        let h1 = NodeId::Head { layer: 0, head: 1 };
        assert!(g.edges().iter().all(|e| !(e.source == h0 && e.destination == h1)));
        assert!(g.edge_index(&EdgeId {
            source: h0,
            destination: NodeId::Mlp { layer: 0 },
            channel: Channel::In
        })
        .is_some());
    }

    #[test]
    fn node_names_round_trip() {
        for n in CompGraph::build(3, 2).nodes() {
            assert_eq!(n.to_string().parse::<NodeId>().unwrap(), *n);
        }
    }
}
