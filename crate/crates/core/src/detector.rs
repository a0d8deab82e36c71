//! Nearest-neighbor anomaly detector over neighborhood type vectors.
//!
//! Training collects the deduplicated set of type vectors seen in a benign
//! graph; scoring assigns each test node the euclidean distance to its
//! nearest train vector. Tuple shapes first seen at test time extend the
//! universe with implicit zero train counts, so novel structure always
//! raises the score rather than being dropped.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::event::Label;
use crate::features::{FeatureError, NeighborhoodExtractor, TupleUniverse};
use crate::graph::{NodeUuid, ProvGraph};

/// One scored node with its thresholded prediction and ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub uuid: NodeUuid,
    pub score: f64,
    pub predicted: Label,
    pub truth: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorError {
    EmptyTrainGraph,
    Feature(FeatureError),
}

impl fmt::Display for DetectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorError::EmptyTrainGraph => write!(f, "train graph has no nodes"),
            DetectorError::Feature(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DetectorError {}

impl From<FeatureError> for DetectorError {
    fn from(e: FeatureError) -> Self {
        DetectorError::Feature(e)
    }
}

/// Trained reference state: tuple universe plus the deduplicated train
/// vectors with their node multiplicities. Immutable once built.
#[derive(Debug, Clone)]
pub struct DetectorModel {
    universe: TupleUniverse,
    /// Distinct count vectors in ascending lexicographic order, paired with
    /// how many train nodes produced each.
    train_vectors: Vec<(Vec<u32>, u32)>,
    k: usize,
    cap: usize,
}

impl DetectorModel {
    pub fn universe(&self) -> &TupleUniverse {
        &self.universe
    }

    /// Number of distinct train vectors.
    pub fn vector_count(&self) -> usize {
        self.train_vectors.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn train_node_count(&self) -> u64 {
        self.train_vectors.iter().map(|(_, m)| *m as u64).sum()
    }
}

/// Per-day deduplicated vector multiset against a shared universe.
fn day_vectors(
    g: &ProvGraph,
    universe: &TupleUniverse,
    k: usize,
    cap: usize,
) -> Result<BTreeMap<Vec<u32>, u32>, DetectorError> {
    let mut extractor = NeighborhoodExtractor::new(g, k, cap);
    let mut dedup: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
    for n in g.nodes() {
        let v = extractor.vector_for(n.uuid, universe)?;
        *dedup.entry(v.counts).or_insert(0) += 1;
    }
    Ok(dedup)
}

/// Learns the benign reference set from one or more train graphs, one per
/// training day. Vectors are extracted per day and unioned, so a node that
/// recurs daily is represented by its within-day shape rather than by a
/// multi-day accumulation.
pub fn train_days(
    graphs: &[&ProvGraph],
    k: usize,
    cap: usize,
) -> Result<DetectorModel, DetectorError> {
    if graphs.iter().all(|g| g.node_count() == 0) {
        return Err(DetectorError::EmptyTrainGraph);
    }
    let mut universe = TupleUniverse::new();
    for g in graphs {
        universe.extend_from_graph(g);
    }
    let mut merged: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
    for g in graphs {
        for (v, mult) in day_vectors(g, &universe, k, cap)? {
            *merged.entry(v).or_insert(0) += mult;
        }
    }
    Ok(DetectorModel {
        universe,
        train_vectors: merged.into_iter().collect(),
        k,
        cap,
    })
}

/// Learns the benign reference set from a single train graph.
pub fn train(g: &ProvGraph, k: usize, cap: usize) -> Result<DetectorModel, DetectorError> {
    train_days(&[g], k, cap)
}

/// Leave-one-day-out calibration: every train day's nodes are scored
/// against a model built from the other days, and the given percentile
/// (nearest-rank) of all held-out node scores becomes the threshold.
/// Needs at least two day graphs.
pub fn day_out_threshold(
    graphs: &[&ProvGraph],
    k: usize,
    cap: usize,
    percentile: f64,
) -> Result<f64, DetectorError> {
    if graphs.len() < 2 {
        return Err(DetectorError::EmptyTrainGraph);
    }
    let mut universe = TupleUniverse::new();
    for g in graphs {
        universe.extend_from_graph(g);
    }
    let per_day: Vec<BTreeMap<Vec<u32>, u32>> = graphs
        .iter()
        .map(|g| day_vectors(g, &universe, k, cap))
        .collect::<Result<_, _>>()?;
    let mut scores: Vec<f64> = Vec::new();
    for (held_out, day) in per_day.iter().enumerate() {
        let mut reference: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        for (j, other) in per_day.iter().enumerate() {
            if j != held_out {
                for (v, mult) in other {
                    *reference.entry(v.clone()).or_insert(0) += mult;
                }
            }
        }
        let reference: Vec<(Vec<u32>, u32)> = reference.into_iter().collect();
        if reference.is_empty() {
            continue;
        }
        for (v, mult) in day {
            let d = libm::sqrt(nearest_sq(v, &reference, usize::MAX));
            scores.extend(core::iter::repeat_n(d, *mult as usize));
        }
    }
    if scores.is_empty() {
        return Err(DetectorError::EmptyTrainGraph);
    }
    scores.sort_unstable_by(f64::total_cmp);
    let n = scores.len();
    let rank = libm::ceil(percentile / 100.0 * n as f64) as usize;
    Ok(scores[rank.clamp(1, n) - 1])
}

/// Squared distance from `probe` to its nearest vector among `vectors`,
/// skipping index `skip` (pass usize::MAX to skip none). Bails out of a
/// candidate as soon as its partial sum exceeds the best so far.
fn nearest_sq(probe: &[u32], vectors: &[(Vec<u32>, u32)], skip: usize) -> f64 {
    let mut best = f64::INFINITY;
    for (i, (candidate, _)) in vectors.iter().enumerate() {
        if i == skip {
            continue;
        }
        let common = probe.len().min(candidate.len());
        let mut acc = 0.0f64;
        let mut over = false;
        for j in 0..common {
            let d = probe[j] as f64 - candidate[j] as f64;
            acc += d * d;
            if acc >= best {
                over = true;
                break;
            }
        }
        if !over {
            let (longer, from) = if probe.len() > common {
                (probe, common)
            } else {
                (candidate.as_slice(), common)
            };
            for &c in &longer[from..] {
                acc += (c as f64) * (c as f64);
                if acc >= best {
                    break;
                }
            }
        }
        if acc < best {
            best = acc;
        }
    }
    best
}

impl DetectorModel {
    /// Scores every node of a test graph built under the same strategy.
    /// Output preserves the graph's node order.
    pub fn score_all(&self, g_test: &ProvGraph) -> Result<Vec<(NodeUuid, f64)>, DetectorError> {
        let mut universe = self.universe.clone();
        universe.extend_from_graph(g_test);
        let mut extractor = NeighborhoodExtractor::new(g_test, self.k, self.cap);
        let mut cache: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let mut out = Vec::with_capacity(g_test.node_count());
        for n in g_test.nodes() {
            let v = extractor.vector_for(n.uuid, &universe)?;
            let score = match cache.get(&v.counts) {
                Some(&s) => s,
                None => {
                    let s = libm::sqrt(nearest_sq(&v.counts, &self.train_vectors, usize::MAX));
                    cache.insert(v.counts, s);
                    s
                }
            };
            out.push((n.uuid, score));
        }
        Ok(out)
    }

    /// Leave-one-out nearest distances over the train nodes: each node
    /// scores the distance from its vector to the nearest *other distinct*
    /// train vector. Excluding the node's own vector class keeps duplicated
    /// vectors from collapsing the whole distribution to zero while still
    /// weighting common structures by how many nodes carry them.
    pub fn leave_one_out_scores(&self) -> Vec<f64> {
        if self.train_vectors.len() < 2 {
            return Vec::new();
        }
        let mut scores = Vec::with_capacity(self.train_node_count() as usize);
        for (i, (v, mult)) in self.train_vectors.iter().enumerate() {
            let class_nn = libm::sqrt(nearest_sq(v, &self.train_vectors, i));
            scores.extend(core::iter::repeat_n(class_nn, *mult as usize));
        }
        scores
    }

    /// Calibrated threshold: the given percentile (nearest-rank) of the
    /// leave-one-out train scores. Falls back to 0 when no leave-one-out
    /// score exists.
    pub fn percentile_threshold(&self, percentile: f64) -> f64 {
        let mut scores = self.leave_one_out_scores();
        if scores.is_empty() {
            return 0.0;
        }
        scores.sort_unstable_by(f64::total_cmp);
        let n = scores.len();
        let rank = libm::ceil(percentile / 100.0 * n as f64) as usize;
        scores[rank.clamp(1, n) - 1]
    }

    /// Default calibration: 95th percentile of leave-one-out scores.
    pub fn default_threshold(&self) -> f64 {
        self.percentile_threshold(95.0)
    }
}

/// Applies a strict threshold: predicted malicious iff score > threshold.
/// Ground truth comes from the test graph's derived node labels.
pub fn apply_threshold(
    scores: &[(NodeUuid, f64)],
    g_test: &ProvGraph,
    threshold: f64,
) -> Vec<Verdict> {
    scores
        .iter()
        .map(|&(uuid, score)| {
            let truth = g_test
                .index_of(uuid)
                .map(|i| g_test.node(i).label)
                .unwrap_or(Label::Benign);
            Verdict {
                uuid,
                score,
                predicted: if score > threshold {
                    Label::Malicious
                } else {
                    Label::Benign
                },
                truth,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{ActionKind, EntityAttrs, Event};
    use crate::features::UNCAPPED;
    use crate::graph::UuidStrategy;
    use alloc::vec;
    use alloc::vec::Vec;

    fn build(events: Vec<Event>) -> ProvGraph {
        let mut events = events;
        for (i, e) in events.iter_mut().enumerate() {
            e.seq = i as u64;
            e.timestamp = i as i64;
        }
        ProvGraph::build(&events, &UuidStrategy::default()).unwrap()
    }

    fn proc(pid: u32) -> EntityAttrs {
        EntityAttrs::process(pid, alloc::format!("/usr/bin/p{pid}"))
    }

    #[test]
    fn empty_train_graph_is_an_error() {
        let g = build(vec![]);
        assert!(matches!(
            train(&g, 2, 100),
            Err(DetectorError::EmptyTrainGraph)
        ));
    }

    #[test]
    fn duplicate_vectors_collapse() {
        // Two structurally identical process->file pairs: 4 nodes but only
        // as many distinct vectors as distinct shapes.
        let events = vec![
            Event::new(0, proc(1), ActionKind::Read, EntityAttrs::file("/a")),
            Event::new(1, proc(2), ActionKind::Read, EntityAttrs::file("/b")),
        ];
        let g = build(events);
        let model = train(&g, 2, UNCAPPED).unwrap();
        assert!(model.vector_count() <= g.node_count());
        assert_eq!(model.vector_count(), 1);
        assert_eq!(model.train_node_count(), 4);
    }

    #[test]
    fn scoring_train_graph_is_identically_zero() {
        let events = vec![
            Event::new(0, proc(1), ActionKind::Read, EntityAttrs::file("/a")),
            Event::new(1, proc(1), ActionKind::Write, EntityAttrs::file("/b")),
            Event::new(
                2,
                proc(2),
                ActionKind::Connect,
                EntityAttrs::network("10.0.0.1", 40000, "1.1.1.1", 443),
            ),
        ];
        let g = build(events);
        let model = train(&g, 2, UNCAPPED).unwrap();
        let scores = model.score_all(&g).unwrap();
        assert_eq!(scores.len(), g.node_count());
        assert!(scores.iter().all(|(_, s)| *s == 0.0));
    }

    #[test]
    fn novel_test_tuples_extend_universe_and_raise_scores() {
        let g_train = build(vec![Event::new(
            0,
            proc(1),
            ActionKind::Read,
            EntityAttrs::file("/a"),
        )]);
        // Test introduces an action shape absent from training.
        let g_test = build(vec![Event::new(
            0,
            proc(1),
            ActionKind::Delete,
            EntityAttrs::file("/a"),
        )]);
        let model = train(&g_train, 2, UNCAPPED).unwrap();
        let scores = model.score_all(&g_test).unwrap();
        assert!(scores.iter().all(|(_, s)| *s > 0.0));
    }

    #[test]
    fn threshold_is_strict() {
        let g_test = build(vec![Event::new(
            0,
            proc(1),
            ActionKind::Read,
            EntityAttrs::file("/a"),
        )]);
        let uuids: Vec<NodeUuid> = g_test.nodes().iter().map(|n| n.uuid).collect();
        let scores = vec![(uuids[0], 0.0), (uuids[1], 2.0)];
        let verdicts = apply_threshold(&scores, &g_test, 2.0);
        assert_eq!(verdicts[0].predicted, Label::Benign);
        assert_eq!(verdicts[1].predicted, Label::Benign);
        let verdicts = apply_threshold(&scores, &g_test, 1.9);
        assert_eq!(verdicts[1].predicted, Label::Malicious);
        // Max threshold silences everything.
        let max = scores.iter().map(|s| s.1).fold(f64::MIN, f64::max);
        assert!(apply_threshold(&scores, &g_test, max)
            .iter()
            .all(|v| v.predicted == Label::Benign));
    }

    #[test]
    fn negative_zero_threshold_flags_positive_scores_only() {
        let g_test = build(vec![Event::new(
            0,
            proc(1),
            ActionKind::Read,
            EntityAttrs::file("/a"),
        )]);
        let uuids: Vec<NodeUuid> = g_test.nodes().iter().map(|n| n.uuid).collect();
        let scores = vec![(uuids[0], 0.0), (uuids[1], 0.5)];
        let verdicts = apply_threshold(&scores, &g_test, -0.0);
        assert_eq!(verdicts[0].predicted, Label::Benign);
        assert_eq!(verdicts[1].predicted, Label::Malicious);
    }

    #[test]
    fn percentile_threshold_is_deterministic_and_ordered() {
        let mut events = Vec::new();
        // Several process shapes with slightly different fan-outs.
        for pid in 0..10u32 {
            for f in 0..=(pid % 3) {
                events.push(Event::new(
                    0,
                    proc(pid),
                    ActionKind::Read,
                    EntityAttrs::file(alloc::format!("/d{pid}/{f}")),
                ));
            }
        }
        let g = build(events);
        let model = train(&g, 2, UNCAPPED).unwrap();
        let t50 = model.percentile_threshold(50.0);
        let t95 = model.percentile_threshold(95.0);
        assert!(t50 <= t95);
        assert_eq!(t95, model.default_threshold());
    }
}
