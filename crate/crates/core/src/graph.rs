//! Provenance-graph construction under configurable node-identity rules.
//!
//! Node identity (the "UUID") is a stable 64-bit hash of a per-kind field
//! selection. File, registry, and script identities are fixed; process and
//! network identities are configurable, which is exactly what makes graphs
//! merge or split differently under the six presets. The graph also keeps a
//! strategy-independent entity key per node so that node counts and entity
//! counts can be compared.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::event::{ActionKind, EntityAttrs, EntityKind, Event, Label};

/// Stable 64-bit node identity, printed as 16 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeUuid(pub u64);

impl fmt::Display for NodeUuid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl NodeUuid {
    pub fn parse_hex(s: &str) -> Option<NodeUuid> {
        u64::from_str_radix(s, 16).ok().map(NodeUuid)
    }
}

impl Serialize for NodeUuid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{self}"))
    }
}

impl<'de> Deserialize<'de> for NodeUuid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <&str>::deserialize(d)?;
        NodeUuid::parse_hex(s).ok_or_else(|| serde::de::Error::custom("invalid node uuid"))
    }
}

/// FNV-1a, 64-bit. Stable across platforms and builds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Which fields identify a process node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKeyFields {
    PathOnly,
    PidAndPath,
}

/// Which fields identify a network node.
///
/// The fallback chains prefer the most stable identifier that is present:
/// domain, then url, then the full address tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKeyFields {
    DomainThenUrlThenTuple,
    UrlThenTuple,
    Tuple,
    SrcDstIp,
    DstIpOnly,
}

/// A node-identity rule: process and network field selections. File,
/// registry-key, and script identities are fixed (path, path, content).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UuidStrategy {
    pub process: ProcessKeyFields,
    pub network: NetworkKeyFields,
}

impl Default for UuidStrategy {
    fn default() -> Self {
        StrategyPreset::Default.strategy()
    }
}

/// The six named presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyPreset {
    Default,
    Idmap1,
    Idmap2,
    Idmap3,
    Idmap4,
    Idmap5,
}

impl StrategyPreset {
    pub const ALL: [StrategyPreset; 6] = [
        StrategyPreset::Default,
        StrategyPreset::Idmap1,
        StrategyPreset::Idmap2,
        StrategyPreset::Idmap3,
        StrategyPreset::Idmap4,
        StrategyPreset::Idmap5,
    ];

    pub fn strategy(self) -> UuidStrategy {
        match self {
            StrategyPreset::Default => UuidStrategy {
                process: ProcessKeyFields::PidAndPath,
                network: NetworkKeyFields::DomainThenUrlThenTuple,
            },
            // Drops domain and url: every network node keys on the full
            // address tuple.
            StrategyPreset::Idmap1 => UuidStrategy {
                process: ProcessKeyFields::PidAndPath,
                network: NetworkKeyFields::Tuple,
            },
            StrategyPreset::Idmap2 => UuidStrategy {
                process: ProcessKeyFields::PidAndPath,
                network: NetworkKeyFields::SrcDstIp,
            },
            StrategyPreset::Idmap3 => UuidStrategy {
                process: ProcessKeyFields::PathOnly,
                network: NetworkKeyFields::DomainThenUrlThenTuple,
            },
            StrategyPreset::Idmap4 => UuidStrategy {
                process: ProcessKeyFields::PidAndPath,
                network: NetworkKeyFields::DstIpOnly,
            },
            StrategyPreset::Idmap5 => UuidStrategy {
                process: ProcessKeyFields::PathOnly,
                network: NetworkKeyFields::DstIpOnly,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyPreset::Default => "default",
            StrategyPreset::Idmap1 => "idmap1",
            StrategyPreset::Idmap2 => "idmap2",
            StrategyPreset::Idmap3 => "idmap3",
            StrategyPreset::Idmap4 => "idmap4",
            StrategyPreset::Idmap5 => "idmap5",
        }
    }

    /// Accepts "default", "idmap1".."idmap5", and the bare digits "1".."5".
    pub fn parse(s: &str) -> Option<StrategyPreset> {
        match s {
            "default" | "0" => Some(StrategyPreset::Default),
            "idmap1" | "1" => Some(StrategyPreset::Idmap1),
            "idmap2" | "2" => Some(StrategyPreset::Idmap2),
            "idmap3" | "3" => Some(StrategyPreset::Idmap3),
            "idmap4" | "4" => Some(StrategyPreset::Idmap4),
            "idmap5" | "5" => Some(StrategyPreset::Idmap5),
            _ => None,
        }
    }
}

impl fmt::Display for StrategyPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A required identity field was absent from the attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UuidError {
    pub kind: EntityKind,
    pub strategy: &'static str,
    pub field: &'static str,
}

impl fmt::Display for UuidError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cannot derive identity for {} node: strategy {} requires field `{}`",
            self.kind, self.strategy, self.field
        )
    }
}

impl core::error::Error for UuidError {}

fn missing(kind: EntityKind, strategy: &'static str, field: &'static str) -> UuidError {
    UuidError {
        kind,
        strategy,
        field,
    }
}

fn network_tuple_key(attrs: &EntityAttrs, strategy: &'static str) -> Result<String, UuidError> {
    let src_ip = attrs
        .src_ip
        .as_deref()
        .ok_or_else(|| missing(EntityKind::Network, strategy, "src_ip"))?;
    let src_port = attrs
        .src_port
        .ok_or_else(|| missing(EntityKind::Network, strategy, "src_port"))?;
    let dst_ip = attrs
        .dst_ip
        .as_deref()
        .ok_or_else(|| missing(EntityKind::Network, strategy, "dst_ip"))?;
    let dst_port = attrs
        .dst_port
        .ok_or_else(|| missing(EntityKind::Network, strategy, "dst_port"))?;
    Ok(format!("tuple|{src_ip}|{src_port}|{dst_ip}|{dst_port}"))
}

/// The exact byte string a node identity hashes. Two attribute bags map to
/// the same node iff their canonical keys are equal.
pub fn canonical_key(attrs: &EntityAttrs, strategy: &UuidStrategy) -> Result<String, UuidError> {
    let key =
        match attrs.kind {
            EntityKind::Process => {
                let path = attrs
                    .path
                    .as_deref()
                    .ok_or_else(|| missing(EntityKind::Process, strategy_name(strategy), "path"))?;
                match strategy.process {
                    ProcessKeyFields::PathOnly => format!("process|{path}"),
                    ProcessKeyFields::PidAndPath => {
                        let pid = attrs
                            .pid
                            .ok_or_else(|| missing(EntityKind::Process, "pid_and_path", "pid"))?;
                        format!("process|{pid}|{path}")
                    }
                }
            }
            EntityKind::File => {
                let path = attrs
                    .path
                    .as_deref()
                    .ok_or_else(|| missing(EntityKind::File, "fixed", "path"))?;
                format!("file|{path}")
            }
            EntityKind::RegistryKey => {
                let path = attrs
                    .path
                    .as_deref()
                    .ok_or_else(|| missing(EntityKind::RegistryKey, "fixed", "path"))?;
                format!("registry_key|{path}")
            }
            EntityKind::Script => {
                let content = attrs
                    .script_content
                    .as_deref()
                    .ok_or_else(|| missing(EntityKind::Script, "fixed", "script_content"))?;
                format!("script|{content}")
            }
            EntityKind::Network => {
                let part =
                    match strategy.network {
                        NetworkKeyFields::DomainThenUrlThenTuple => {
                            if let Some(d) = attrs.domain.as_deref() {
                                format!("domain|{d}")
                            } else if let Some(u) = attrs.url.as_deref() {
                                format!("url|{u}")
                            } else {
                                network_tuple_key(attrs, "domain_then_url_then_tuple")?
                            }
                        }
                        NetworkKeyFields::UrlThenTuple => {
                            if let Some(u) = attrs.url.as_deref() {
                                format!("url|{u}")
                            } else {
                                network_tuple_key(attrs, "url_then_tuple")?
                            }
                        }
                        NetworkKeyFields::Tuple => network_tuple_key(attrs, "tuple")?,
                        NetworkKeyFields::SrcDstIp => {
                            let src_ip = attrs.src_ip.as_deref().ok_or_else(|| {
                                missing(EntityKind::Network, "src_dst_ip", "src_ip")
                            })?;
                            let dst_ip = attrs.dst_ip.as_deref().ok_or_else(|| {
                                missing(EntityKind::Network, "src_dst_ip", "dst_ip")
                            })?;
                            format!("ips|{src_ip}|{dst_ip}")
                        }
                        NetworkKeyFields::DstIpOnly => {
                            let dst_ip = attrs.dst_ip.as_deref().ok_or_else(|| {
                                missing(EntityKind::Network, "dst_ip_only", "dst_ip")
                            })?;
                            format!("dst|{dst_ip}")
                        }
                    };
                format!("network|{part}")
            }
        };
    Ok(key)
}

fn strategy_name(strategy: &UuidStrategy) -> &'static str {
    match strategy.process {
        ProcessKeyFields::PathOnly => "path_only",
        ProcessKeyFields::PidAndPath => "pid_and_path",
    }
}

/// Deterministic node identity under the given strategy.
pub fn make_uuid(attrs: &EntityAttrs, strategy: &UuidStrategy) -> Result<NodeUuid, UuidError> {
    Ok(NodeUuid(fnv1a64(
        canonical_key(attrs, strategy)?.as_bytes(),
    )))
}

/// Strategy-independent key for the real-world entity behind an attribute
/// bag: process/file/registry by path, network by destination identity
/// (dst_ip, falling back to domain), script by content hash.
pub fn entity_key(attrs: &EntityAttrs) -> Result<String, UuidError> {
    let key = match attrs.kind {
        EntityKind::Process => format!(
            "process:{}",
            attrs
                .path
                .as_deref()
                .ok_or_else(|| missing(EntityKind::Process, "entity", "path"))?
        ),
        EntityKind::File => format!(
            "file:{}",
            attrs
                .path
                .as_deref()
                .ok_or_else(|| missing(EntityKind::File, "entity", "path"))?
        ),
        EntityKind::RegistryKey => format!(
            "registry_key:{}",
            attrs.path.as_deref().ok_or_else(|| missing(
                EntityKind::RegistryKey,
                "entity",
                "path"
            ))?
        ),
        EntityKind::Script => format!(
            "script:{:016x}",
            fnv1a64(
                attrs
                    .script_content
                    .as_deref()
                    .ok_or_else(|| missing(EntityKind::Script, "entity", "script_content"))?
                    .as_bytes()
            )
        ),
        EntityKind::Network => {
            if let Some(ip) = attrs.dst_ip.as_deref() {
                format!("network:{ip}")
            } else if let Some(d) = attrs.domain.as_deref() {
                format!("network:{d}")
            } else {
                return Err(missing(EntityKind::Network, "entity", "dst_ip"));
            }
        }
    };
    Ok(key)
}

/// One graph node: identity, first-seen attributes, derived label, and the
/// strategy-independent entity key.
#[derive(Debug, Clone)]
pub struct Node {
    pub uuid: NodeUuid,
    pub kind: EntityKind,
    pub attrs: EntityAttrs,
    pub label: Label,
    pub entity: String,
}

/// One graph edge; `seq` is the originating event's trace position.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub action: ActionKind,
    pub timestamp: i64,
    pub seq: u64,
    pub label: Label,
}

/// Errors during graph construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    Uuid { seq: u64, source: UuidError },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Uuid { seq, source } => write!(f, "event seq {seq}: {source}"),
        }
    }
}

impl core::error::Error for GraphError {}

/// Typed provenance graph: one node per distinct identity, one edge per
/// event, adjacency sorted by (timestamp, seq). Immutable after build.
#[derive(Debug, Clone)]
pub struct ProvGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: BTreeMap<NodeUuid, u32>,
    /// Per node: incident edge ids, each edge listed once per endpoint
    /// (once total for self-loops), ordered by (timestamp, seq).
    adjacency: Vec<Vec<u32>>,
    /// Distinct field tuples that collided onto one hash. Empty in practice;
    /// populated for reporting rather than failing the build.
    collisions: Vec<String>,
    strategy: UuidStrategy,
}

impl ProvGraph {
    /// Materializes the graph for an event sequence under a strategy.
    ///
    /// Node labels follow the incident rule: a node is malicious iff at
    /// least one of its incident edges is malicious.
    pub fn build(events: &[Event], strategy: &UuidStrategy) -> Result<ProvGraph, GraphError> {
        let mut nodes: Vec<Node> = Vec::new();
        let mut edges: Vec<Edge> = Vec::with_capacity(events.len());
        let mut index: BTreeMap<NodeUuid, u32> = BTreeMap::new();
        let mut canon: BTreeMap<NodeUuid, String> = BTreeMap::new();
        let mut collisions: Vec<String> = Vec::new();

        let mut intern =
            |attrs: &EntityAttrs, seq: u64, nodes: &mut Vec<Node>| -> Result<u32, GraphError> {
                let key = canonical_key(attrs, strategy)
                    .map_err(|source| GraphError::Uuid { seq, source })?;
                let uuid = NodeUuid(fnv1a64(key.as_bytes()));
                match index.get(&uuid) {
                    Some(&i) => {
                        let prior = &canon[&uuid];
                        if *prior != key {
                            collisions.push(format!("uuid {uuid} collides: `{prior}` vs `{key}`"));
                        }
                        Ok(i)
                    }
                    None => {
                        let entity =
                            entity_key(attrs).map_err(|source| GraphError::Uuid { seq, source })?;
                        let i = nodes.len() as u32;
                        nodes.push(Node {
                            uuid,
                            kind: attrs.kind,
                            attrs: attrs.clone(),
                            label: Label::Benign,
                            entity,
                        });
                        index.insert(uuid, i);
                        canon.insert(uuid, key);
                        Ok(i)
                    }
                }
            };

        for e in events {
            let src = intern(&e.subject, e.seq, &mut nodes)?;
            let dst = intern(&e.object, e.seq, &mut nodes)?;
            edges.push(Edge {
                src,
                dst,
                action: e.action,
                timestamp: e.timestamp,
                seq: e.seq,
                label: e.label,
            });
            if e.label.is_malicious() {
                nodes[src as usize].label = Label::Malicious;
                nodes[dst as usize].label = Label::Malicious;
            }
        }

        let mut adjacency: Vec<Vec<u32>> = alloc::vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.src as usize].push(i as u32);
            if e.dst != e.src {
                adjacency[e.dst as usize].push(i as u32);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&i| {
                let e = &edges[i as usize];
                (e.timestamp, e.seq)
            });
        }

        Ok(ProvGraph {
            nodes,
            edges,
            index,
            adjacency,
            collisions,
            strategy: *strategy,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn strategy(&self) -> &UuidStrategy {
        &self.strategy
    }

    pub fn collisions(&self) -> &[String] {
        &self.collisions
    }

    pub fn index_of(&self, uuid: NodeUuid) -> Option<u32> {
        self.index.get(&uuid).copied()
    }

    pub fn node(&self, idx: u32) -> &Node {
        &self.nodes[idx as usize]
    }

    pub fn edge(&self, idx: u32) -> &Edge {
        &self.edges[idx as usize]
    }

    pub fn incident_edges(&self, idx: u32) -> &[u32] {
        &self.adjacency[idx as usize]
    }

    /// Map node uuid -> entity key for every node.
    pub fn entity_map(&self) -> BTreeMap<NodeUuid, String> {
        self.nodes
            .iter()
            .map(|n| (n.uuid, n.entity.clone()))
            .collect()
    }

    /// Distinct entity keys across all nodes.
    pub fn entity_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.entity.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// Exact counts over one graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub entity_count: usize,
    pub nodes_by_kind: BTreeMap<String, usize>,
    pub edges_by_action: BTreeMap<String, usize>,
    pub malicious_nodes: usize,
    pub malicious_edges: usize,
}

pub fn graph_stats(g: &ProvGraph) -> GraphStats {
    let mut nodes_by_kind: BTreeMap<String, usize> = BTreeMap::new();
    for n in g.nodes() {
        *nodes_by_kind
            .entry(n.kind.as_str().to_string())
            .or_insert(0) += 1;
    }
    let mut edges_by_action: BTreeMap<String, usize> = BTreeMap::new();
    for e in g.edges() {
        *edges_by_action
            .entry(e.action.as_str().to_string())
            .or_insert(0) += 1;
    }
    GraphStats {
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        entity_count: g.entity_count(),
        nodes_by_kind,
        edges_by_action,
        malicious_nodes: g.nodes().iter().filter(|n| n.label.is_malicious()).count(),
        malicious_edges: g.edges().iter().filter(|e| e.label.is_malicious()).count(),
    }
}
