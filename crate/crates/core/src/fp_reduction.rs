//! Process-level false-positive reduction.
//!
//! Alerted processes are profiled by their (action, object, timestamp)
//! behaviors, weighted TF-IDF style by how exclusively they touch each
//! object, connected into a mutual-union kNN similarity graph, and
//! clustered with Louvain. Processes that land in large communities are
//! many near-copies of the same behavior, which is the signature of a
//! false positive rather than of a rare attack.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::event::{ActionKind, Event};
use crate::graph::entity_key;

#[derive(Debug, Clone, PartialEq)]
pub enum FpError {
    /// An alerted process key has no events in the trace.
    NoEventsForProcess(String),
    /// Similarity graphs need at least two vectors.
    TooFewVectors(usize),
    /// An event's subject or object could not be keyed.
    BadEntity { seq: u64, message: String },
}

impl fmt::Display for FpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FpError::NoEventsForProcess(p) => {
                write!(f, "alerted process `{p}` has no events in the trace")
            }
            FpError::TooFewVectors(n) => {
                write!(f, "similarity graph needs at least 2 vectors, got {n}")
            }
            FpError::BadEntity { seq, message } => write!(f, "event seq {seq}: {message}"),
        }
    }
}

impl core::error::Error for FpError {}

/// One behavior triple of a process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Behavior {
    pub action: ActionKind,
    pub object: String,
    pub timestamp: i64,
}

/// Everything one alerted process did in the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessProfile {
    pub process: String,
    pub behaviors: Vec<Behavior>,
}

/// Collects one profile per alerted process entity key, drawing behaviors
/// from every event whose subject maps to that key. Objects are identified
/// by their strategy-independent entity keys.
pub fn profile(
    events: &[Event],
    alerted: &BTreeSet<String>,
) -> Result<Vec<ProcessProfile>, FpError> {
    let mut by_process: BTreeMap<&str, Vec<Behavior>> = BTreeMap::new();
    for key in alerted {
        by_process.insert(key, Vec::new());
    }
    for e in events {
        let subject_key = entity_key(&e.subject).map_err(|err| FpError::BadEntity {
            seq: e.seq,
            message: alloc::format!("{err}"),
        })?;
        if let Some(behaviors) = by_process.get_mut(subject_key.as_str()) {
            let object = entity_key(&e.object).map_err(|err| FpError::BadEntity {
                seq: e.seq,
                message: alloc::format!("{err}"),
            })?;
            behaviors.push(Behavior {
                action: e.action,
                object,
                timestamp: e.timestamp,
            });
        }
    }
    let mut profiles = Vec::with_capacity(alerted.len());
    for (process, behaviors) in by_process {
        if behaviors.is_empty() {
            return Err(FpError::NoEventsForProcess(String::from(process)));
        }
        profiles.push(ProcessProfile {
            process: String::from(process),
            behaviors,
        });
    }
    Ok(profiles)
}

/// Sparse TF-IDF weights of one process over object entity keys. Objects
/// the process touches are always present, even at weight zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TfIdfVector {
    pub process: String,
    pub weights: BTreeMap<String, f64>,
}

/// weight(p, o) = freq(p, o) * ln(N / n_o), with N the number of profiled
/// processes, n_o the number of profiles touching object o, and freq the
/// event multiplicity of the interaction.
pub fn tfidf(profiles: &[ProcessProfile]) -> Vec<TfIdfVector> {
    let n_processes = profiles.len() as f64;
    let mut containing: BTreeMap<&str, u64> = BTreeMap::new();
    for p in profiles {
        let distinct: BTreeSet<&str> = p.behaviors.iter().map(|b| b.object.as_str()).collect();
        for o in distinct {
            *containing.entry(o).or_insert(0) += 1;
        }
    }
    profiles
        .iter()
        .map(|p| {
            let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
            for b in &p.behaviors {
                *freq.entry(b.object.as_str()).or_insert(0) += 1;
            }
            let weights = freq
                .into_iter()
                .map(|(o, f)| {
                    let idf = libm::log(n_processes / containing[o] as f64);
                    (String::from(o), f as f64 * idf)
                })
                .collect();
            TfIdfVector {
                process: p.process.clone(),
                weights,
            }
        })
        .collect()
}

/// Euclidean distance between two sparse weight maps over the key union.
pub fn sparse_distance(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let mut acc = 0.0f64;
    for (k, wa) in a {
        let wb = b.get(k).copied().unwrap_or(0.0);
        let d = wa - wb;
        acc += d * d;
    }
    for (k, wb) in b {
        if !a.contains_key(k) {
            acc += wb * wb;
        }
    }
    libm::sqrt(acc)
}

/// Weighted undirected similarity graph over alerted processes.
/// Node ids index `keys`, which is sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityGraph {
    pub keys: Vec<String>,
    /// (i, j, weight) with i < j, each pair at most once.
    pub edges: Vec<(usize, usize, f64)>,
}

/// Mutual-union kNN graph: every process is linked to its `knn` nearest
/// neighbors by TF-IDF euclidean distance, edges shared both ways collapse,
/// and weights are 1 / (1 + distance). Ties break on the neighbor key.
pub fn similarity_graph(vectors: &[TfIdfVector], knn: usize) -> Result<SimilarityGraph, FpError> {
    if vectors.len() < 2 {
        return Err(FpError::TooFewVectors(vectors.len()));
    }
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| vectors[a].process.cmp(&vectors[b].process));
    let keys: Vec<String> = order.iter().map(|&i| vectors[i].process.clone()).collect();

    let n = order.len();
    let mut edge_set: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                (
                    sparse_distance(&vectors[order[i]].weights, &vectors[order[j]].weights),
                    j,
                )
            })
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| keys[a.1].cmp(&keys[b.1])));
        for &(d, j) in candidates.iter().take(knn) {
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            edge_set.entry((lo, hi)).or_insert(1.0 / (1.0 + d));
        }
    }
    Ok(SimilarityGraph {
        keys,
        edges: edge_set.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
    })
}

/// One detected community; members are sorted process keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Community {
    pub id: usize,
    pub members: Vec<String>,
}

impl Community {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Newman modularity of a node->community assignment at resolution 1.0.
/// Self-loops count once toward edge weight and twice toward degree.
pub fn modularity(g: &SimilarityGraph, assignment: &[usize]) -> f64 {
    let mut m = 0.0f64;
    let mut degree = alloc::vec![0.0f64; g.keys.len()];
    for &(i, j, w) in &g.edges {
        m += w;
        if i == j {
            degree[i] += 2.0 * w;
        } else {
            degree[i] += w;
            degree[j] += w;
        }
    }
    if m == 0.0 {
        return 0.0;
    }
    let mut intra: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total_degree: BTreeMap<usize, f64> = BTreeMap::new();
    for &(i, j, w) in &g.edges {
        if assignment[i] == assignment[j] {
            *intra.entry(assignment[i]).or_insert(0.0) += w;
        }
    }
    for (i, d) in degree.iter().enumerate() {
        *total_degree.entry(assignment[i]).or_insert(0.0) += d;
    }
    let mut q = 0.0;
    for (c, d) in total_degree {
        let l = intra.get(&c).copied().unwrap_or(0.0);
        q += l / m - (d / (2.0 * m)) * (d / (2.0 * m));
    }
    q
}

/// Aggregated working graph for one Louvain level.
struct LevelGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
    total_weight: f64,
}

impl LevelGraph {
    fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj = alloc::vec![Vec::new(); n];
        let mut self_loops = alloc::vec![0.0f64; n];
        let mut degree = alloc::vec![0.0f64; n];
        let mut total = 0.0;
        for &(i, j, w) in edges {
            total += w;
            if i == j {
                self_loops[i] += w;
                degree[i] += 2.0 * w;
            } else {
                adj[i].push((j, w));
                adj[j].push((i, w));
                degree[i] += w;
                degree[j] += w;
            }
        }
        LevelGraph {
            n,
            adj,
            self_loops,
            degree,
            total_weight: total,
        }
    }

    /// One pass of local moving in ascending node order, repeated until a
    /// full sweep makes no move. Returns the assignment and whether any
    /// node moved at all.
    fn local_moving(&self) -> (Vec<usize>, bool) {
        let m = self.total_weight;
        let mut community: Vec<usize> = (0..self.n).collect();
        let mut community_degree: Vec<f64> = self.degree.clone();
        let mut moved_any = false;
        let mut improved = true;
        while improved {
            improved = false;
            for node in 0..self.n {
                let current = community[node];
                community_degree[current] -= self.degree[node];

                // Weight from `node` into each neighboring community.
                let mut links: BTreeMap<usize, f64> = BTreeMap::new();
                links.insert(current, 0.0);
                for &(other, w) in &self.adj[node] {
                    *links.entry(community[other]).or_insert(0.0) += w;
                }

                let mut best_community = current;
                let mut best_gain = 0.0f64;
                let base = links[&current];
                // Ascending candidate order, strict improvement: equal
                // gains keep the smallest community id.
                for (&candidate, &k_in) in &links {
                    // Gain relative to staying in the current community,
                    // both evaluated with `node` detached.
                    let gain = (k_in - base) / m
                        - self.degree[node]
                            * (community_degree[candidate] - community_degree[current])
                            / (2.0 * m * m);
                    if gain > best_gain + 1e-12 {
                        best_gain = gain;
                        best_community = candidate;
                    }
                }

                community_degree[best_community] += self.degree[node];
                if best_community != current {
                    community[node] = best_community;
                    moved_any = true;
                    improved = true;
                }
            }
        }
        (community, moved_any)
    }

    /// Collapses communities into super-nodes; returns the aggregated graph
    /// and the dense community relabeling used.
    fn aggregate(&self, community: &[usize]) -> (LevelGraph, Vec<usize>) {
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in community {
            let next = relabel.len();
            relabel.entry(c).or_insert(next);
        }
        let dense: Vec<usize> = community.iter().map(|c| relabel[c]).collect();
        let n = relabel.len();
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for i in 0..self.n {
            let ci = dense[i];
            if self.self_loops[i] != 0.0 {
                *weights.entry((ci, ci)).or_insert(0.0) += self.self_loops[i];
            }
            for &(j, w) in &self.adj[i] {
                if j < i {
                    continue; // each undirected edge once
                }
                let cj = dense[j];
                let key = if ci <= cj { (ci, cj) } else { (cj, ci) };
                *weights.entry(key).or_insert(0.0) += w;
            }
        }
        let edges: Vec<(usize, usize, f64)> =
            weights.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        (LevelGraph::from_edges(n, &edges), dense)
    }
}

/// Louvain community detection at resolution 1.0 with deterministic node
/// ordering. The returned partition's modularity is never below that of
/// the all-singletons partition.
pub fn louvain(g: &SimilarityGraph) -> Vec<Community> {
    let n = g.keys.len();
    if n == 0 {
        return Vec::new();
    }
    let mut level = LevelGraph::from_edges(n, &g.edges);
    // node -> community of the original graph, refined level by level.
    let mut assignment: Vec<usize> = (0..n).collect();
    if level.total_weight > 0.0 {
        loop {
            let (community, moved) = level.local_moving();
            if !moved {
                break;
            }
            let (aggregated, dense) = level.aggregate(&community);
            for slot in assignment.iter_mut() {
                *slot = dense[*slot];
            }
            if aggregated.n == level.n {
                break;
            }
            level = aggregated;
        }
    }

    // Group members and order communities by their smallest member key.
    let mut groups: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (node, &c) in assignment.iter().enumerate() {
        groups.entry(c).or_default().push(&g.keys[node]);
    }
    let mut communities: Vec<Vec<&str>> = groups
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            members
        })
        .collect();
    communities.sort_by(|a, b| a[0].cmp(b[0]));
    communities
        .into_iter()
        .enumerate()
        .map(|(id, members)| Community {
            id,
            members: members.into_iter().map(String::from).collect(),
        })
        .collect()
}

/// Flagging outcome plus triage data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagReport {
    /// Processes in communities strictly larger than the threshold.
    pub fp_processes: BTreeSet<String>,
    pub community_count: usize,
    /// Per community: (id, representative = smallest member key, size,
    /// flagged).
    pub representatives: Vec<(usize, String, usize, bool)>,
}

/// Communities strictly larger than `threshold` members are deemed false
/// positives wholesale; every community gets one representative for triage.
pub fn flag_false_positives(communities: &[Community], threshold: usize) -> FlagReport {
    let mut fp_processes = BTreeSet::new();
    let mut representatives = Vec::with_capacity(communities.len());
    for c in communities {
        let flagged = c.size() > threshold;
        if flagged {
            fp_processes.extend(c.members.iter().cloned());
        }
        representatives.push((c.id, c.members[0].clone(), c.size(), flagged));
    }
    FlagReport {
        fp_processes,
        community_count: communities.len(),
        representatives,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{ActionKind, EntityAttrs, Event};
    use alloc::string::ToString;
    use alloc::vec;

    fn ev(ts: i64, proc_path: &str, action: ActionKind, object: EntityAttrs) -> Event {
        Event::new(ts, EntityAttrs::process(1, proc_path), action, object)
    }

    fn keyset(keys: &[&str]) -> BTreeSet<String> {
        keys.iter().map(|k| alloc::format!("process:{k}")).collect()
    }

    #[test]
    fn profile_collects_all_behaviors() {
        let events = vec![
            ev(1, "/bin/a", ActionKind::Read, EntityAttrs::file("/x")),
            ev(2, "/bin/a", ActionKind::Write, EntityAttrs::file("/y")),
            ev(3, "/bin/b", ActionKind::Read, EntityAttrs::file("/x")),
            ev(4, "/bin/a", ActionKind::Read, EntityAttrs::file("/x")),
        ];
        let profiles = profile(&events, &keyset(&["/bin/a"])).unwrap();
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].behaviors.len(), 3);
        assert_eq!(profiles[0].behaviors[0].object, "file:/x");
    }

    #[test]
    fn profile_empty_alerted_set_is_empty() {
        let events = vec![ev(1, "/bin/a", ActionKind::Read, EntityAttrs::file("/x"))];
        assert!(profile(&events, &BTreeSet::new()).unwrap().is_empty());
    }

    #[test]
    fn profile_rejects_process_without_events() {
        let events = vec![ev(1, "/bin/a", ActionKind::Read, EntityAttrs::file("/x"))];
        assert_eq!(
            profile(&events, &keyset(&["/bin/ghost"])),
            Err(FpError::NoEventsForProcess(
                "process:/bin/ghost".to_string()
            ))
        );
    }

    #[test]
    fn tfidf_universal_object_weighs_zero() {
        let events = vec![
            ev(1, "/bin/a", ActionKind::Read, EntityAttrs::file("/shared")),
            ev(2, "/bin/b", ActionKind::Read, EntityAttrs::file("/shared")),
            ev(3, "/bin/b", ActionKind::Read, EntityAttrs::file("/only_b")),
        ];
        let profiles = profile(&events, &keyset(&["/bin/a", "/bin/b"])).unwrap();
        let vectors = tfidf(&profiles);
        for v in &vectors {
            assert_eq!(v.weights["file:/shared"], 0.0);
        }
    }

    #[test]
    fn tfidf_two_process_fixture_matches_formula() {
        // Object /o touched 3x by p1 only, of 2 processes: weight 3*ln(2).
        let events = vec![
            ev(1, "/bin/p1", ActionKind::Read, EntityAttrs::file("/o")),
            ev(2, "/bin/p1", ActionKind::Read, EntityAttrs::file("/o")),
            ev(3, "/bin/p1", ActionKind::Read, EntityAttrs::file("/o")),
            ev(4, "/bin/p2", ActionKind::Read, EntityAttrs::file("/other")),
        ];
        let profiles = profile(&events, &keyset(&["/bin/p1", "/bin/p2"])).unwrap();
        let vectors = tfidf(&profiles);
        let p1 = vectors
            .iter()
            .find(|v| v.process == "process:/bin/p1")
            .unwrap();
        assert!((p1.weights["file:/o"] - 2.0794415416798357).abs() < 1e-12);
    }

    #[test]
    fn tfidf_single_process_is_all_zero() {
        let events = vec![
            ev(1, "/bin/p1", ActionKind::Read, EntityAttrs::file("/o")),
            ev(2, "/bin/p1", ActionKind::Write, EntityAttrs::file("/q")),
        ];
        let profiles = profile(&events, &keyset(&["/bin/p1"])).unwrap();
        let vectors = tfidf(&profiles);
        assert!(vectors[0].weights.values().all(|w| *w == 0.0));
    }

    #[test]
    fn tfidf_is_invariant_to_event_order() {
        let mut events = vec![
            ev(1, "/bin/p1", ActionKind::Read, EntityAttrs::file("/o")),
            ev(2, "/bin/p2", ActionKind::Read, EntityAttrs::file("/q")),
            ev(3, "/bin/p1", ActionKind::Write, EntityAttrs::file("/q")),
        ];
        let alerted = keyset(&["/bin/p1", "/bin/p2"]);
        let a = tfidf(&profile(&events, &alerted).unwrap());
        events.reverse();
        let b = tfidf(&profile(&events, &alerted).unwrap());
        for (va, vb) in a.iter().zip(&b) {
            assert_eq!(va.process, vb.process);
            assert_eq!(va.weights, vb.weights);
        }
    }

    fn v(process: &str, weights: &[(&str, f64)]) -> TfIdfVector {
        TfIdfVector {
            process: process.to_string(),
            weights: weights.iter().map(|(k, w)| (k.to_string(), *w)).collect(),
        }
    }

    #[test]
    fn similarity_graph_identical_vectors_weight_one() {
        let vectors = vec![v("a", &[("o", 1.0)]), v("b", &[("o", 1.0)])];
        let g = similarity_graph(&vectors, 1).unwrap();
        assert_eq!(g.edges, vec![(0, 1, 1.0)]);
    }

    #[test]
    fn similarity_graph_knn_matches_exhaustive_pairing() {
        // Exhaustive distances: a-b = 1, a-c = 5, b-c = sqrt(26).
        let vectors = vec![
            v("a", &[("x", 0.0)]),
            v("b", &[("x", 1.0)]),
            v("c", &[("y", 5.0)]),
        ];
        let g = similarity_graph(&vectors, 1).unwrap();
        // a's nearest is b; b's nearest is a; c's nearest is a (5 < sqrt 26).
        assert_eq!(g.edges.len(), 2);
        assert_eq!((g.edges[0].0, g.edges[0].1), (0, 1));
        assert!((g.edges[0].2 - 0.5).abs() < 1e-12);
        assert_eq!((g.edges[1].0, g.edges[1].1), (0, 2));
        assert!((g.edges[1].2 - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_graph_saturates_to_complete() {
        let vectors = vec![
            v("a", &[("x", 0.0)]),
            v("b", &[("x", 1.0)]),
            v("c", &[("x", 9.0)]),
            v("d", &[("x", 2.5)]),
        ];
        let g = similarity_graph(&vectors, 3).unwrap();
        assert_eq!(g.edges.len(), 6);
        assert!(similarity_graph(&vectors[..1], 1).is_err());
    }

    /// Exhaustive best-modularity search over all partitions (n <= 8).
    fn exhaustive_best_modularity(g: &SimilarityGraph) -> f64 {
        let n = g.keys.len();
        let mut assignment = alloc::vec![0usize; n];
        let mut best = f64::MIN;
        // Restricted growth strings enumerate set partitions.
        fn recurse(
            g: &SimilarityGraph,
            assignment: &mut Vec<usize>,
            pos: usize,
            max_used: usize,
            best: &mut f64,
        ) {
            let n = assignment.len();
            if pos == n {
                let q = modularity(g, assignment);
                if q > *best {
                    *best = q;
                }
                return;
            }
            for c in 0..=max_used + 1 {
                assignment[pos] = c;
                recurse(g, assignment, pos + 1, max_used.max(c), best);
            }
        }
        recurse(g, &mut assignment, 1, 0, &mut best);
        best
    }

    fn clique_pair_graph() -> SimilarityGraph {
        // Two 3-cliques joined by nothing: communities must be the cliques.
        let keys: Vec<String> = ["a", "b", "c", "x", "y", "z"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let edges = vec![
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (3, 4, 1.0),
            (3, 5, 1.0),
            (4, 5, 1.0),
        ];
        SimilarityGraph { keys, edges }
    }

    #[test]
    fn louvain_splits_disconnected_cliques() {
        let g = clique_pair_graph();
        let communities = louvain(&g);
        assert_eq!(communities.len(), 2);
        assert_eq!(communities[0].members, vec!["a", "b", "c"]);
        assert_eq!(communities[1].members, vec!["x", "y", "z"]);

        // And it reaches the exhaustive optimum on this fixture.
        let assignment = assignment_of(&g, &communities);
        let q = modularity(&g, &assignment);
        let best = exhaustive_best_modularity(&g);
        assert!((q - best).abs() < 1e-9, "louvain {q} vs optimum {best}");
    }

    fn assignment_of(g: &SimilarityGraph, communities: &[Community]) -> Vec<usize> {
        let index: BTreeMap<&str, usize> = g
            .keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();
        let mut assignment = alloc::vec![0usize; g.keys.len()];
        for c in communities {
            for m in &c.members {
                assignment[index[m.as_str()]] = c.id;
            }
        }
        assignment
    }

    #[test]
    fn louvain_single_node_and_edgeless() {
        let single = SimilarityGraph {
            keys: vec!["only".to_string()],
            edges: vec![],
        };
        let communities = louvain(&single);
        assert_eq!(communities.len(), 1);
        assert_eq!(communities[0].members, vec!["only"]);

        let edgeless = SimilarityGraph {
            keys: (0..5).map(|i| alloc::format!("p{i}")).collect(),
            edges: vec![],
        };
        assert_eq!(louvain(&edgeless).len(), 5);
    }

    #[test]
    fn louvain_never_worse_than_singletons() {
        let g = clique_pair_graph();
        let singleton: Vec<usize> = (0..g.keys.len()).collect();
        let communities = louvain(&g);
        let assignment = assignment_of(&g, &communities);
        assert!(modularity(&g, &assignment) >= modularity(&g, &singleton));
    }

    #[test]
    fn flagging_is_strict_about_threshold() {
        let communities = vec![
            Community {
                id: 0,
                members: (0..25).map(|i| alloc::format!("p{i:02}")).collect(),
            },
            Community {
                id: 1,
                members: vec!["q1".to_string(), "q2".to_string(), "q3".to_string()],
            },
        ];
        let report = flag_false_positives(&communities, 20);
        assert_eq!(report.fp_processes.len(), 25);
        assert_eq!(report.community_count, 2);
        assert_eq!(report.representatives.len(), 2);
        assert_eq!(report.representatives[0].1, "p00");
        assert!(report.representatives[0].3);
        assert!(!report.representatives[1].3);

        // Exactly at the threshold: nothing flagged.
        let at_threshold = vec![Community {
            id: 0,
            members: (0..20).map(|i| alloc::format!("p{i:02}")).collect(),
        }];
        let report = flag_false_positives(&at_threshold, 20);
        assert!(report.fp_processes.is_empty());
    }
}
