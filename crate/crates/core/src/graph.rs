//! Per-session directed graphs over items and attribute values, and their
//! padded batches.
//!
//! Each adjacent pair in a sequence adds a directed edge; for attribute
//! sequences every value of one position connects to every value of the
//! next. Edge counts are row-normalized into `m_out`, and the transposed
//! counts row-normalized into `m_in`.

use crate::data::{Attribute, AttributeTable};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("empty prefix")]
    EmptyPrefix,
    #[error("example {example} has {found} graph channels, expected {expected}")]
    ChannelLayout {
        example: usize,
        expected: usize,
        found: usize,
    },
    #[error("{examples} examples but {labels} labels")]
    LabelCount { examples: usize, labels: usize },
    #[error("empty batch")]
    EmptyBatch,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeWeighting {
    /// Repeated transitions add up before normalization.
    #[default]
    Counts,
    /// Every distinct edge has weight 1 before normalization.
    Binary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmptyPositions {
    /// Connect the last non-empty position to the next non-empty one.
    #[default]
    Bridge,
    /// An empty position breaks the chain.
    Break,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelfLoops {
    /// Consecutive positions sharing a node add an edge to itself.
    #[default]
    Keep,
    Drop,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub edges: EdgeWeighting,
    pub empty: EmptyPositions,
    #[serde(default)]
    pub self_loops: SelfLoops,
}

/// Directed graph of one item or attribute sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionGraph {
    /// Unique node ids (item or value indices) in first-appearance order.
    pub nodes: Vec<usize>,
    /// Node slots of every sequence position (empty for valueless positions).
    pub alias: Vec<Vec<usize>>,
    /// Row-normalized incoming adjacency, `n x n` row-major.
    pub m_in: Vec<f64>,
    /// Row-normalized outgoing adjacency, `n x n` row-major.
    pub m_out: Vec<f64>,
    /// Slots of the final non-empty position.
    pub last_slots: Vec<usize>,
}

impl SessionGraph {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn in_row(&self, slot: usize) -> &[f64] {
        let n = self.n();
        &self.m_in[slot * n..(slot + 1) * n]
    }

    pub fn out_row(&self, slot: usize) -> &[f64] {
        let n = self.n();
        &self.m_out[slot * n..(slot + 1) * n]
    }

    pub fn slot_of(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|&x| x == node)
    }

    /// Outgoing adjacency as `node<TAB>neighbor<TAB>weight` lines.
    pub fn to_adjacency_text(&self, label: impl Fn(usize) -> String) -> String {
        let mut out = String::new();
        for (u, &node) in self.nodes.iter().enumerate() {
            for (v, &w) in self.out_row(u).iter().enumerate() {
                if w != 0.0 {
                    writeln!(out, "{}\t{}\t{}", label(node), label(self.nodes[v]), w)
                        .expect("write to string");
                }
            }
        }
        out
    }
}

/// Builds a graph from a sequence of node sets. Singleton sets give the
/// item graph; attribute value sets give attribute graphs.
pub fn build_graph<'a, I>(positions: I, options: GraphOptions) -> SessionGraph
where
    I: IntoIterator<Item = &'a [usize]>,
{
    let mut nodes: Vec<usize> = Vec::new();
    let mut alias: Vec<Vec<usize>> = Vec::new();
    for set in positions {
        let slots = set
            .iter()
            .map(|&x| match nodes.iter().position(|&y| y == x) {
                Some(s) => s,
                None => {
                    nodes.push(x);
                    nodes.len() - 1
                }
            })
            .collect();
        alias.push(slots);
    }

    let n = nodes.len();
    let mut counts = vec![0.0f64; n * n];
    let mut prev: Option<usize> = None;
    for (t, slots) in alias.iter().enumerate() {
        if slots.is_empty() {
            if options.empty == EmptyPositions::Break {
                prev = None;
            }
            continue;
        }
        if let Some(p) = prev {
            for &u in &alias[p] {
                for &v in slots {
                    if u == v && options.self_loops == SelfLoops::Drop {
                        continue;
                    }
                    counts[u * n + v] += 1.0;
                }
            }
        }
        prev = Some(t);
    }
    if options.edges == EdgeWeighting::Binary {
        for c in counts.iter_mut().filter(|c| **c > 0.0) {
            *c = 1.0;
        }
    }

    let mut transposed = vec![0.0f64; n * n];
    for u in 0..n {
        for v in 0..n {
            transposed[v * n + u] = counts[u * n + v];
        }
    }
    let last_slots = alias
        .iter()
        .rev()
        .find(|s| !s.is_empty())
        .cloned()
        .unwrap_or_default();
    SessionGraph {
        nodes,
        alias,
        m_in: row_normalize(transposed, n),
        m_out: row_normalize(counts, n),
        last_slots,
    }
}

fn row_normalize(mut m: Vec<f64>, n: usize) -> Vec<f64> {
    if n == 0 {
        return m;
    }
    for row in m.chunks_mut(n) {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            for x in row.iter_mut() {
                *x /= total;
            }
        }
    }
    m
}

pub fn build_item_graph(
    prefix: &[usize],
    options: GraphOptions,
) -> Result<SessionGraph, GraphError> {
    if prefix.is_empty() {
        return Err(GraphError::EmptyPrefix);
    }
    Ok(build_graph(prefix.chunks(1), options))
}

/// Graph over the values of `attribute` along `prefix`. All-empty prefixes
/// give a graph with zero nodes.
pub fn build_attribute_graph(
    prefix: &[usize],
    attribute: &Attribute,
    options: GraphOptions,
) -> Result<SessionGraph, GraphError> {
    if prefix.is_empty() {
        return Err(GraphError::EmptyPrefix);
    }
    Ok(build_graph(
        prefix.iter().map(|&i| attribute.of(i)),
        options,
    ))
}

/// The item graph and all attribute graphs of one prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleGraphs {
    pub item: SessionGraph,
    pub attributes: Vec<AttributeChannel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeChannel {
    pub graph: SessionGraph,
    /// For every value node, the item-graph slots of the prefix items carrying that value.
    pub members: Vec<Vec<usize>>,
}

impl ExampleGraphs {
    pub fn build(
        prefix: &[usize],
        table: &AttributeTable,
        options: GraphOptions,
    ) -> Result<Self, GraphError> {
        let item = build_item_graph(prefix, options)?;
        let attributes = table
            .attributes
            .iter()
            .map(|attr| {
                let graph = build_attribute_graph(prefix, attr, options)?;
                let members = graph
                    .nodes
                    .iter()
                    .map(|value| {
                        item.nodes
                            .iter()
                            .enumerate()
                            .filter(|(_, &it)| attr.of(it).contains(value))
                            .map(|(slot, _)| slot)
                            .collect()
                    })
                    .collect();
                Ok(AttributeChannel { graph, members })
            })
            .collect::<Result<_, GraphError>>()?;
        Ok(ExampleGraphs { item, attributes })
    }

    pub fn channels(&self) -> usize {
        1 + self.attributes.len()
    }

    pub fn channel(&self, c: usize) -> &SessionGraph {
        if c == 0 {
            &self.item
        } else {
            &self.attributes[c - 1].graph
        }
    }
}

/// One graph channel of a batch, padded to a common width.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBatch {
    /// Padded node count (at least 1).
    pub width: usize,
    /// Node ids per example (unpadded).
    pub nodes: Vec<Vec<usize>>,
    /// `batch * width` flags, true for real slots.
    pub mask: Vec<bool>,
    /// Nonzero entries `(column, weight)` of each padded row of `m_in`.
    pub m_in: Vec<Vec<(usize, f64)>>,
    pub m_out: Vec<Vec<(usize, f64)>>,
    pub last_slots: Vec<Vec<usize>>,
}

impl ChannelBatch {
    fn from_graphs(graphs: &[&SessionGraph]) -> Self {
        let width = graphs.iter().map(|g| g.n()).max().unwrap_or(0).max(1);
        let mut mask = Vec::with_capacity(graphs.len() * width);
        let mut m_in = Vec::with_capacity(graphs.len() * width);
        let mut m_out = Vec::with_capacity(graphs.len() * width);
        for g in graphs {
            for slot in 0..width {
                let real = slot < g.n();
                mask.push(real);
                let sparse = |row: &[f64]| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, &w)| w != 0.0)
                        .map(|(c, &w)| (c, w))
                        .collect()
                };
                m_in.push(if real {
                    sparse(g.in_row(slot))
                } else {
                    Vec::new()
                });
                m_out.push(if real {
                    sparse(g.out_row(slot))
                } else {
                    Vec::new()
                });
            }
        }
        ChannelBatch {
            width,
            nodes: graphs.iter().map(|g| g.nodes.clone()).collect(),
            mask,
            m_in,
            m_out,
            last_slots: graphs.iter().map(|g| g.last_slots.clone()).collect(),
        }
    }

    pub fn batch_size(&self) -> usize {
        self.nodes.len()
    }

    /// True when example `b` has no nodes in this channel.
    pub fn is_empty(&self, b: usize) -> bool {
        self.nodes[b].is_empty()
    }

    pub fn mask_of(&self, b: usize) -> &[bool] {
        &self.mask[b * self.width..(b + 1) * self.width]
    }

    fn dense(rows: &[Vec<(usize, f64)>], b: usize, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width * width];
        for (r, row) in rows[b * width..(b + 1) * width].iter().enumerate() {
            for &(c, w) in row {
                out[r * width + c] = w;
            }
        }
        out
    }

    /// Padded `width x width` incoming adjacency of example `b`.
    pub fn dense_in(&self, b: usize) -> Vec<f64> {
        Self::dense(&self.m_in, b, self.width)
    }

    pub fn dense_out(&self, b: usize) -> Vec<f64> {
        Self::dense(&self.m_out, b, self.width)
    }
}

/// Padded graphs of a mini-batch: channel 0 is the item graph, channels
/// `1..=K` the attribute graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphBatch {
    pub channels: Vec<ChannelBatch>,
    /// `members[j][b][k]`: item slots of example `b` carrying value node `k` of attribute `j`.
    pub members: Vec<Vec<Vec<Vec<usize>>>>,
    pub labels: Vec<usize>,
}

impl GraphBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_attributes(&self) -> usize {
        self.channels.len() - 1
    }
}

pub fn batch_graphs(
    examples: &[&ExampleGraphs],
    labels: &[usize],
) -> Result<GraphBatch, GraphError> {
    let first = examples.first().ok_or(GraphError::EmptyBatch)?;
    if labels.len() != examples.len() {
        return Err(GraphError::LabelCount {
            examples: examples.len(),
            labels: labels.len(),
        });
    }
    let expected = first.channels();
    for (i, e) in examples.iter().enumerate() {
        if e.channels() != expected {
            return Err(GraphError::ChannelLayout {
                example: i,
                expected,
                found: e.channels(),
            });
        }
    }
    let channels = (0..expected)
        .map(|c| {
            let graphs: Vec<&SessionGraph> = examples.iter().map(|e| e.channel(c)).collect();
            let batch = ChannelBatch::from_graphs(&graphs);
            for (b, g) in graphs.iter().enumerate() {
                if c > 0 && g.is_empty() {
                    log::trace!("example {b}: attribute channel {c} has no nodes");
                }
            }
            batch
        })
        .collect();
    let members = (0..expected - 1)
        .map(|j| {
            examples
                .iter()
                .map(|e| e.attributes[j].members.clone())
                .collect()
        })
        .collect();
    Ok(GraphBatch {
        channels,
        members,
        labels: labels.to_vec(),
    })
}
