//! Canonical system-event records and the entity taxonomy.
//!
//! A trace is a sequence of [`Event`]s, each describing one audited action
//! of a subject process on an object entity. The wire format (JSON Lines)
//! uses exactly the field names declared here; parsing itself lives in the
//! std companion crate since it needs readers and line numbers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{self, UuidError, UuidStrategy};

/// The five node kinds a provenance graph distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Process,
    File,
    Network,
    RegistryKey,
    Script,
}

impl EntityKind {
    pub const ALL: [EntityKind; 5] = [
        EntityKind::Process,
        EntityKind::File,
        EntityKind::Network,
        EntityKind::RegistryKey,
        EntityKind::Script,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Process => "process",
            EntityKind::File => "file",
            EntityKind::Network => "network",
            EntityKind::RegistryKey => "registry_key",
            EntityKind::Script => "script",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed action vocabulary. Unknown action strings are a parse error, not
/// a silent default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Exec,
    Fork,
    Read,
    Write,
    Open,
    Close,
    Connect,
    Send,
    Recv,
    Load,
    ModifyRegistry,
    RunScript,
    Delete,
}

impl ActionKind {
    pub const ALL: [ActionKind; 13] = [
        ActionKind::Exec,
        ActionKind::Fork,
        ActionKind::Read,
        ActionKind::Write,
        ActionKind::Open,
        ActionKind::Close,
        ActionKind::Connect,
        ActionKind::Send,
        ActionKind::Recv,
        ActionKind::Load,
        ActionKind::ModifyRegistry,
        ActionKind::RunScript,
        ActionKind::Delete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Exec => "exec",
            ActionKind::Fork => "fork",
            ActionKind::Read => "read",
            ActionKind::Write => "write",
            ActionKind::Open => "open",
            ActionKind::Close => "close",
            ActionKind::Connect => "connect",
            ActionKind::Send => "send",
            ActionKind::Recv => "recv",
            ActionKind::Load => "load",
            ActionKind::ModifyRegistry => "modify_registry",
            ActionKind::RunScript => "run_script",
            ActionKind::Delete => "delete",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth flag carried by events and derived for nodes.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    #[default]
    Benign,
    Malicious,
}

impl Label {
    pub fn is_malicious(self) -> bool {
        matches!(self, Label::Malicious)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malicious => "malicious",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn is_benign(label: &Label) -> bool {
    !label.is_malicious()
}

/// Attribute bag for one entity reference. Which fields must be present
/// depends on the kind and, for graph building, on the active UUID
/// strategy; that check happens at graph-build time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityAttrs {
    pub kind: EntityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pid: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmdline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_ip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_port: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst_ip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst_port: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_content: Option<String>,
}

impl EntityAttrs {
    fn empty(kind: EntityKind) -> Self {
        EntityAttrs {
            kind,
            pid: None,
            path: None,
            cmdline: None,
            domain: None,
            url: None,
            src_ip: None,
            src_port: None,
            dst_ip: None,
            dst_port: None,
            script_content: None,
        }
    }

    pub fn process(pid: u32, path: impl Into<String>) -> Self {
        let mut a = Self::empty(EntityKind::Process);
        a.pid = Some(pid);
        a.path = Some(path.into());
        a
    }

    pub fn with_cmdline(mut self, cmdline: impl Into<String>) -> Self {
        self.cmdline = Some(cmdline.into());
        self
    }

    pub fn file(path: impl Into<String>) -> Self {
        let mut a = Self::empty(EntityKind::File);
        a.path = Some(path.into());
        a
    }

    pub fn registry_key(path: impl Into<String>) -> Self {
        let mut a = Self::empty(EntityKind::RegistryKey);
        a.path = Some(path.into());
        a
    }

    pub fn script(content: impl Into<String>) -> Self {
        let mut a = Self::empty(EntityKind::Script);
        a.script_content = Some(content.into());
        a
    }

    /// Network endpoint with the full address tuple; domain and url attach
    /// via [`EntityAttrs::with_domain`] / [`EntityAttrs::with_url`].
    pub fn network(
        src_ip: impl Into<String>,
        src_port: u16,
        dst_ip: impl Into<String>,
        dst_port: u16,
    ) -> Self {
        let mut a = Self::empty(EntityKind::Network);
        a.src_ip = Some(src_ip.into());
        a.src_port = Some(src_port);
        a.dst_ip = Some(dst_ip.into());
        a.dst_port = Some(dst_port);
        a
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = Some(domain.into());
        self
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = Some(url.into());
        self
    }
}

/// One audit record: subject process performed `action` on `object`.
///
/// `seq` is the 0-based position in the trace; it is assigned by the parser
/// and never serialized. Timestamps are integer nanoseconds from the trace
/// epoch and must be non-decreasing in `seq` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(skip)]
    pub seq: u64,
    #[serde(rename = "ts")]
    pub timestamp: i64,
    pub action: ActionKind,
    pub subject: EntityAttrs,
    pub object: EntityAttrs,
    #[serde(default, skip_serializing_if = "is_benign")]
    pub label: Label,
}

impl Event {
    pub fn new(
        timestamp: i64,
        subject: EntityAttrs,
        action: ActionKind,
        object: EntityAttrs,
    ) -> Self {
        Event {
            seq: 0,
            timestamp,
            action,
            subject,
            object,
            label: Label::Benign,
        }
    }

    pub fn labeled(mut self, label: Label) -> Self {
        self.label = label;
        self
    }
}

/// Errors from event-level analyses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventError {
    /// `unknown_behavior_stats` got an empty test sequence.
    NoTestEvents,
    /// A subject process carries no `path`, so it cannot be keyed.
    MissingSubjectPath { seq: u64 },
    /// Object identity could not be derived under the active strategy.
    Uuid { seq: u64, source: UuidError },
}

impl fmt::Display for EventError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventError::NoTestEvents => write!(f, "no test events"),
            EventError::MissingSubjectPath { seq } => {
                write!(f, "event seq {seq}: subject process has no path")
            }
            EventError::Uuid { seq, source } => write!(f, "event seq {seq}: {source}"),
        }
    }
}

impl core::error::Error for EventError {}

/// Per-process unknown-behavior ratios plus their CDF over processes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnknownBehaviorStats {
    /// Process file path -> fraction of its test events whose
    /// (action, object identity) pair never occurs for it in training.
    pub per_process: BTreeMap<String, f64>,
    /// Cumulative distribution over processes: (ratio, fraction of
    /// processes with ratio <= this value), ascending in ratio.
    pub cdf: Vec<(f64, f64)>,
}

/// Fraction of unknown test behavior per process.
///
/// A test event of process `P` (keyed by its file path) counts as unknown
/// when the pair (action, object identity) never appears for `P` in the
/// training sequence. Object identity follows the given UUID strategy so
/// that "unknown" means the same thing it will mean in the built graph.
pub fn unknown_behavior_stats(
    train: &[Event],
    test: &[Event],
    strategy: &UuidStrategy,
) -> Result<UnknownBehaviorStats, EventError> {
    if test.is_empty() {
        return Err(EventError::NoTestEvents);
    }

    let pair = |e: &Event| -> Result<(String, (ActionKind, u64)), EventError> {
        let path = e
            .subject
            .path
            .clone()
            .ok_or(EventError::MissingSubjectPath { seq: e.seq })?;
        let object_id = graph::make_uuid(&e.object, strategy)
            .map_err(|source| EventError::Uuid { seq: e.seq, source })?;
        Ok((path, (e.action, object_id.0)))
    };

    let mut known: BTreeMap<String, BTreeSet<(ActionKind, u64)>> = BTreeMap::new();
    for e in train {
        let (path, p) = pair(e)?;
        known.entry(path).or_default().insert(p);
    }

    let mut totals: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for e in test {
        let (path, p) = pair(e)?;
        let seen = known.get(&path).map(|s| s.contains(&p)).unwrap_or(false);
        let entry = totals.entry(path).or_insert((0, 0));
        entry.0 += 1;
        if !seen {
            entry.1 += 1;
        }
    }

    let per_process: BTreeMap<String, f64> = totals
        .into_iter()
        .map(|(path, (total, unknown))| (path, unknown as f64 / total as f64))
        .collect();

    let mut ratios: Vec<f64> = per_process.values().copied().collect();
    ratios.sort_unstable_by(f64::total_cmp);
    let n = ratios.len() as f64;
    let mut cdf = Vec::new();
    for (i, r) in ratios.iter().enumerate() {
        // Collapse runs of equal ratios into one step at the last index.
        if i + 1 == ratios.len() || ratios[i + 1] > *r {
            cdf.push((*r, (i + 1) as f64 / n));
        }
    }

    Ok(UnknownBehaviorStats { per_process, cdf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::UuidStrategy;

    fn ev(ts: i64, pid: u32, proc_path: &str, action: ActionKind, object: EntityAttrs) -> Event {
        Event::new(ts, EntityAttrs::process(pid, proc_path), action, object)
    }

    fn seqd(mut events: Vec<Event>) -> Vec<Event> {
        for (i, e) in events.iter_mut().enumerate() {
            e.seq = i as u64;
        }
        events
    }

    #[test]
    fn fully_known_process_has_ratio_zero() {
        let strategy = UuidStrategy::default();
        let train = seqd(alloc::vec![
            ev(
                1,
                10,
                "/usr/bin/a",
                ActionKind::Read,
                EntityAttrs::file("/etc/x")
            ),
            ev(
                2,
                10,
                "/usr/bin/a",
                ActionKind::Write,
                EntityAttrs::file("/tmp/y")
            ),
        ]);
        let test = seqd(alloc::vec![
            ev(
                3,
                77,
                "/usr/bin/a",
                ActionKind::Read,
                EntityAttrs::file("/etc/x")
            ),
            ev(
                4,
                77,
                "/usr/bin/a",
                ActionKind::Write,
                EntityAttrs::file("/tmp/y")
            ),
        ]);
        let stats = unknown_behavior_stats(&train, &test, &strategy).unwrap();
        assert_eq!(stats.per_process["/usr/bin/a"], 0.0);
    }

    #[test]
    fn absent_process_has_ratio_one() {
        let strategy = UuidStrategy::default();
        let train = seqd(alloc::vec![ev(
            1,
            10,
            "/usr/bin/a",
            ActionKind::Read,
            EntityAttrs::file("/etc/x"),
        )]);
        let test = seqd(alloc::vec![ev(
            2,
            11,
            "/usr/bin/b",
            ActionKind::Read,
            EntityAttrs::file("/etc/x"),
        )]);
        let stats = unknown_behavior_stats(&train, &test, &strategy).unwrap();
        assert_eq!(stats.per_process["/usr/bin/b"], 1.0);
    }

    #[test]
    fn partially_known_ratio_is_two_thirds() {
        // 3 test pairs, 1 seen in train: hand enumeration gives 2/3.
        let strategy = UuidStrategy::default();
        let train = seqd(alloc::vec![ev(
            1,
            10,
            "/usr/bin/a",
            ActionKind::Read,
            EntityAttrs::file("/etc/x"),
        )]);
        let test = seqd(alloc::vec![
            ev(
                2,
                20,
                "/usr/bin/a",
                ActionKind::Read,
                EntityAttrs::file("/etc/x")
            ),
            ev(
                3,
                20,
                "/usr/bin/a",
                ActionKind::Write,
                EntityAttrs::file("/etc/x")
            ),
            ev(
                4,
                20,
                "/usr/bin/a",
                ActionKind::Read,
                EntityAttrs::file("/etc/z")
            ),
        ]);
        let stats = unknown_behavior_stats(&train, &test, &strategy).unwrap();
        let got = stats.per_process["/usr/bin/a"];
        assert!((got - 2.0 / 3.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn empty_test_is_an_error() {
        let strategy = UuidStrategy::default();
        assert_eq!(
            unknown_behavior_stats(&[], &[], &strategy),
            Err(EventError::NoTestEvents)
        );
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let strategy = UuidStrategy::default();
        let train = seqd(alloc::vec![ev(
            1,
            10,
            "/usr/bin/a",
            ActionKind::Read,
            EntityAttrs::file("/etc/x"),
        )]);
        let test = seqd(alloc::vec![
            ev(
                2,
                20,
                "/usr/bin/a",
                ActionKind::Read,
                EntityAttrs::file("/etc/x")
            ),
            ev(
                3,
                21,
                "/usr/bin/b",
                ActionKind::Read,
                EntityAttrs::file("/etc/x")
            ),
            ev(
                4,
                22,
                "/usr/bin/c",
                ActionKind::Write,
                EntityAttrs::file("/etc/q")
            ),
        ]);
        let stats = unknown_behavior_stats(&train, &test, &strategy).unwrap();
        let cdf = &stats.cdf;
        assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(cdf.last().unwrap().1, 1.0);
        assert!(stats.per_process.values().all(|r| (0.0..=1.0).contains(r)));
    }
}
