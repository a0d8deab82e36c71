//! Neighborhood type vectors: per-node count vectors over the
//! (source kind, action, destination kind) tuples reachable within k hops,
//! and euclidean distances between them.
//!
//! Traversal is depth-first from the anchor node, treating edges as
//! undirected for reachability while recording each tuple in the edge's
//! true direction. Each node expands at most `cap` incident edges, taken in
//! (timestamp, seq) order, and each edge is recorded at most once per
//! traversal, so the result on a tree with an unbounded cap is exactly the
//! within-k-hop edge multiset.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::event::{ActionKind, EntityKind, Label};
use crate::graph::{NodeUuid, ProvGraph};

/// Unbounded per-node neighbor cap.
pub const UNCAPPED: usize = usize::MAX;

/// One observed edge shape: source node kind, action, destination kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TypeTuple {
    pub src: EntityKind,
    pub action: ActionKind,
    pub dst: EntityKind,
}

impl fmt::Display for TypeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.src, self.action, self.dst)
    }
}

/// Indexed set of every tuple shape under consideration. Indices are
/// assigned in first-observation order and stay stable as the universe is
/// extended, so previously built vectors remain valid zero-padded.
#[derive(Debug, Clone, Default)]
pub struct TupleUniverse {
    tuples: Vec<TypeTuple>,
    index: BTreeMap<TypeTuple, usize>,
}

impl TupleUniverse {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_graph(g: &ProvGraph) -> Self {
        let mut u = Self::new();
        u.extend_from_graph(g);
        u
    }

    pub fn from_graphs(graphs: &[&ProvGraph]) -> Self {
        let mut u = Self::new();
        for g in graphs {
            u.extend_from_graph(g);
        }
        u
    }

    /// Adds every tuple shape present in `g` that is not yet indexed.
    pub fn extend_from_graph(&mut self, g: &ProvGraph) {
        for e in g.edges() {
            let t = TypeTuple {
                src: g.node(e.src).kind,
                action: e.action,
                dst: g.node(e.dst).kind,
            };
            self.insert(t);
        }
    }

    pub fn insert(&mut self, t: TypeTuple) -> usize {
        if let Some(&i) = self.index.get(&t) {
            return i;
        }
        let i = self.tuples.len();
        self.tuples.push(t);
        self.index.insert(t, i);
        i
    }

    pub fn index_of(&self, t: &TypeTuple) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[TypeTuple] {
        &self.tuples
    }
}

/// Count vector of one node over a tuple universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeVector {
    pub owner: NodeUuid,
    pub counts: Vec<u32>,
}

/// Errors from feature extraction and distance computation.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureError {
    NodeNotFound(NodeUuid),
    TupleOutsideUniverse(TypeTuple),
    LengthMismatch {
        left: usize,
        right: usize,
    },
    EmptyTrainSet,
    /// `distance_ratio` requires at least one test node of each class.
    MissingClass(Label),
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::NodeNotFound(u) => write!(f, "node {u} not in graph"),
            FeatureError::TupleOutsideUniverse(t) => {
                write!(
                    f,
                    "tuple {t} missing from universe; build it from all graphs first"
                )
            }
            FeatureError::LengthMismatch { left, right } => {
                write!(f, "vector length mismatch: {left} vs {right}")
            }
            FeatureError::EmptyTrainSet => write!(f, "empty train vector set"),
            FeatureError::MissingClass(l) => {
                write!(f, "test graph has no {l} labeled nodes")
            }
        }
    }
}

impl core::error::Error for FeatureError {}

/// Reusable traversal scratch sized to one graph. Extracting features for
/// many nodes of the same graph through one extractor avoids re-allocating
/// the visit marks per call.
pub struct NeighborhoodExtractor<'g> {
    g: &'g ProvGraph,
    k: usize,
    cap: usize,
    node_mark: Vec<u32>,
    edge_mark: Vec<u32>,
    epoch: u32,
}

struct Frame {
    node: u32,
    depth: usize,
    pos: usize,
    limit: usize,
}

impl<'g> NeighborhoodExtractor<'g> {
    pub fn new(g: &'g ProvGraph, k: usize, cap: usize) -> Self {
        NeighborhoodExtractor {
            g,
            k,
            cap,
            node_mark: alloc::vec![0; g.node_count()],
            edge_mark: alloc::vec![0; g.edge_count()],
            epoch: 0,
        }
    }

    /// The multiset of type tuples recorded by a depth-first traversal
    /// from `v`, as a vector in traversal order.
    pub fn tuples_around(&mut self, v: NodeUuid) -> Result<Vec<TypeTuple>, FeatureError> {
        let start = self.g.index_of(v).ok_or(FeatureError::NodeNotFound(v))?;
        Ok(self.tuples_around_idx(start))
    }

    fn tuples_around_idx(&mut self, start: u32) -> Vec<TypeTuple> {
        self.epoch += 1;
        let epoch = self.epoch;
        let g = self.g;
        let mut out = Vec::new();
        self.node_mark[start as usize] = epoch;
        if self.k == 0 {
            return out;
        }
        let mut stack: Vec<Frame> = Vec::new();
        stack.push(Frame {
            node: start,
            depth: 0,
            pos: 0,
            limit: self.cap.min(g.incident_edges(start).len()),
        });
        while let Some(frame) = stack.last_mut() {
            if frame.pos == frame.limit {
                stack.pop();
                continue;
            }
            let edge_id = g.incident_edges(frame.node)[frame.pos];
            frame.pos += 1;
            let depth = frame.depth;
            let node = frame.node;
            if self.edge_mark[edge_id as usize] != epoch {
                self.edge_mark[edge_id as usize] = epoch;
                let e = g.edge(edge_id);
                out.push(TypeTuple {
                    src: g.node(e.src).kind,
                    action: e.action,
                    dst: g.node(e.dst).kind,
                });
                let other = if e.src == node { e.dst } else { e.src };
                if self.node_mark[other as usize] != epoch {
                    self.node_mark[other as usize] = epoch;
                    // The far endpoint only expands its own edges while it
                    // is strictly inside the hop bound.
                    if depth + 1 < self.k {
                        stack.push(Frame {
                            node: other,
                            depth: depth + 1,
                            pos: 0,
                            limit: self.cap.min(g.incident_edges(other).len()),
                        });
                    }
                }
            }
        }
        out
    }

    /// Count vector for `v` over `universe`.
    pub fn vector_for(
        &mut self,
        v: NodeUuid,
        universe: &TupleUniverse,
    ) -> Result<TypeVector, FeatureError> {
        let tuples = self.tuples_around(v)?;
        vectorize(&tuples, universe, v)
    }
}

/// One-off neighborhood extraction; prefer [`NeighborhoodExtractor`] when
/// iterating over many nodes.
pub fn neighborhood_tuples(
    g: &ProvGraph,
    v: NodeUuid,
    k: usize,
    cap: usize,
) -> Result<Vec<TypeTuple>, FeatureError> {
    NeighborhoodExtractor::new(g, k, cap).tuples_around(v)
}

/// Counts tuple multiplicities into a vector aligned with `universe`.
pub fn vectorize(
    tuples: &[TypeTuple],
    universe: &TupleUniverse,
    owner: NodeUuid,
) -> Result<TypeVector, FeatureError> {
    let mut counts = alloc::vec![0u32; universe.len()];
    for t in tuples {
        let i = universe
            .index_of(t)
            .ok_or(FeatureError::TupleOutsideUniverse(*t))?;
        counts[i] += 1;
    }
    Ok(TypeVector { owner, counts })
}

/// Squared euclidean distance over raw count slices; shorter inputs are
/// implicitly zero-padded, which is how a universe extension behaves.
pub fn squared_distance_padded(a: &[u32], b: &[u32]) -> f64 {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut acc = 0.0f64;
    for i in 0..short.len() {
        let d = short[i] as f64 - long[i] as f64;
        acc += d * d;
    }
    for &c in &long[short.len()..] {
        acc += (c as f64) * (c as f64);
    }
    acc
}

/// Euclidean distance between two vectors of equal universe.
pub fn distance(a: &TypeVector, b: &TypeVector) -> Result<f64, FeatureError> {
    if a.counts.len() != b.counts.len() {
        return Err(FeatureError::LengthMismatch {
            left: a.counts.len(),
            right: b.counts.len(),
        });
    }
    Ok(libm::sqrt(squared_distance_padded(&a.counts, &b.counts)))
}

/// Minimum distance from `test` to any vector in `train`.
pub fn nearest_train_distance(
    test: &TypeVector,
    train: &[TypeVector],
) -> Result<f64, FeatureError> {
    if train.is_empty() {
        return Err(FeatureError::EmptyTrainSet);
    }
    let mut best = f64::INFINITY;
    for t in train {
        if t.counts.len() != test.counts.len() {
            return Err(FeatureError::LengthMismatch {
                left: test.counts.len(),
                right: t.counts.len(),
            });
        }
        let d2 = squared_distance_padded(&test.counts, &t.counts);
        if d2 < best {
            best = d2;
        }
    }
    Ok(libm::sqrt(best))
}

/// How per-class nearest-train distances are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Mean,
    Median,
}

fn aggregate(values: &mut [f64], how: Aggregate) -> f64 {
    match how {
        Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregate::Median => {
            values.sort_unstable_by(f64::total_cmp);
            let n = values.len();
            if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) / 2.0
            }
        }
    }
}

/// Class separation summary: aggregated nearest-train distance of malicious
/// test nodes over that of benign test nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRatio {
    pub ratio: f64,
    pub mean_malicious: f64,
    pub mean_benign: f64,
    /// True when both class aggregates were zero and the ratio was pinned
    /// to 1.0 by convention.
    pub degenerate: bool,
}

const RATIO_DENOMINATOR_GUARD: f64 = 1e-12;

/// Nearest-train distance ratio between malicious and benign test nodes.
///
/// The tuple universe is built from both graphs up front. A 0/0 ratio is
/// reported as 1.0 with the `degenerate` flag set; a zero benign aggregate
/// with nonzero malicious aggregate is guarded to yield a large finite
/// ratio instead of dividing by zero.
pub fn distance_ratio(
    g_train: &ProvGraph,
    g_test: &ProvGraph,
    k: usize,
    cap: usize,
    how: Aggregate,
) -> Result<DistanceRatio, FeatureError> {
    let universe = TupleUniverse::from_graphs(&[g_train, g_test]);

    let mut train_extract = NeighborhoodExtractor::new(g_train, k, cap);
    let mut train_vecs: Vec<TypeVector> = Vec::with_capacity(g_train.node_count());
    for n in g_train.nodes() {
        train_vecs.push(train_extract.vector_for(n.uuid, &universe)?);
    }

    let mut test_extract = NeighborhoodExtractor::new(g_test, k, cap);
    let mut malicious: Vec<f64> = Vec::new();
    let mut benign: Vec<f64> = Vec::new();
    for n in g_test.nodes() {
        let v = test_extract.vector_for(n.uuid, &universe)?;
        let d = nearest_train_distance(&v, &train_vecs)?;
        if n.label.is_malicious() {
            malicious.push(d);
        } else {
            benign.push(d);
        }
    }
    if malicious.is_empty() {
        return Err(FeatureError::MissingClass(Label::Malicious));
    }
    if benign.is_empty() {
        return Err(FeatureError::MissingClass(Label::Benign));
    }

    let mean_malicious = aggregate(&mut malicious, how);
    let mean_benign = aggregate(&mut benign, how);
    let degenerate = mean_malicious == 0.0 && mean_benign == 0.0;
    let ratio = if degenerate {
        1.0
    } else {
        mean_malicious / mean_benign.max(RATIO_DENOMINATOR_GUARD)
    };
    Ok(DistanceRatio {
        ratio,
        mean_malicious,
        mean_benign,
        degenerate,
    })
}
