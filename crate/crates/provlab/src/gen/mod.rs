//! Deterministic synthetic trace generation.
//!
//! A [`ScenarioSpec`] fully determines the emitted traces: benign host
//! background from the versioned catalog, optional attack templates with
//! their indicators of compromise, and the three false-positive archetypes
//! (sparse, unknown, semantic change). Events are labeled malicious exactly
//! when they reference an IOC; pre-deployment attacks additionally strip
//! labels from their training-day copies while the manifest keeps the
//! covert counts.

mod attack;
mod benign;
pub mod catalog;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use base64::Engine;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use provlab_core::event::{ActionKind, EntityAttrs, Event, Label};
use provlab_core::graph::{entity_key, fnv1a64};

use crate::trace::write_trace_file;
use catalog::Catalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostProfile {
    Stable,
    EverChanging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Backdoor,
    Mining,
    InfoStealing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpArchetype {
    Sparse,
    Unknown,
    SemanticChange,
}

fn default_train_days() -> u32 {
    2
}
fn default_test_days() -> u32 {
    1
}
fn default_scale() -> u32 {
    20_000
}
fn default_divergence() -> f64 {
    1.0
}
fn default_pre_deployment() -> bool {
    true
}
fn default_profile() -> HostProfile {
    HostProfile::Stable
}

/// Everything a generation run depends on. Equal specs produce
/// byte-identical traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    #[serde(default = "default_train_days")]
    pub train_days: u32,
    /// Test days.
    #[serde(default = "default_test_days")]
    pub days: u32,
    #[serde(default = "default_profile")]
    pub host_profile: HostProfile,
    #[serde(default)]
    pub attacks: BTreeSet<AttackKind>,
    #[serde(default)]
    pub fp_archetypes: BTreeSet<FpArchetype>,
    /// Benign events per day; attack and archetype volumes come on top.
    #[serde(default = "default_scale")]
    pub scale: u32,
    /// 0.0..=1.0: how structurally far attack processes sit from benign
    /// activity (fan-out of their network/file behavior).
    #[serde(default = "default_divergence")]
    pub attack_divergence: f64,
    /// Extra share of process open/close churn, the cloud-host imbalance
    /// knob. 0 disables.
    #[serde(default)]
    pub imbalance: f64,
    /// Inject info-stealing steps into training days with stripped labels.
    #[serde(default = "default_pre_deployment")]
    pub pre_deployment: bool,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 42,
            train_days: default_train_days(),
            days: default_test_days(),
            host_profile: default_profile(),
            attacks: BTreeSet::new(),
            fp_archetypes: BTreeSet::new(),
            scale: default_scale(),
            attack_divergence: default_divergence(),
            imbalance: 0.0,
            pre_deployment: default_pre_deployment(),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.train_days >= 1, "need at least one training day");
        ensure!(self.days >= 1, "need at least one test day");
        ensure!(
            self.scale >= 200,
            "scale below 200 events/day is degenerate"
        );
        ensure!(
            (0.0..=1.0).contains(&self.attack_divergence),
            "attack_divergence must be within [0, 1]"
        );
        ensure!(self.imbalance >= 0.0, "imbalance must be non-negative");
        Ok(())
    }
}

/// Indicator-of-compromise names used for ground-truth labeling.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IocSet {
    pub process_paths: BTreeSet<String>,
    pub file_paths: BTreeSet<String>,
    pub registry_paths: BTreeSet<String>,
    pub domains: BTreeSet<String>,
    pub ips: BTreeSet<String>,
}

impl IocSet {
    fn attrs_reference(&self, attrs: &EntityAttrs) -> bool {
        use provlab_core::event::EntityKind::*;
        let path_hit =
            |set: &BTreeSet<String>| attrs.path.as_deref().is_some_and(|p| set.contains(p));
        let kind_hit = match attrs.kind {
            Process => path_hit(&self.process_paths),
            File => path_hit(&self.file_paths),
            RegistryKey => path_hit(&self.registry_paths),
            Network => {
                attrs
                    .dst_ip
                    .as_deref()
                    .is_some_and(|ip| self.ips.contains(ip))
                    || attrs
                        .domain
                        .as_deref()
                        .is_some_and(|d| self.domains.contains(d))
            }
            Script => false,
        };
        kind_hit
            || attrs
                .cmdline
                .as_deref()
                .is_some_and(|c| self.cmdline_references(c))
    }

    fn cmdline_references(&self, cmdline: &str) -> bool {
        let mentions = |text: &str| {
            self.process_paths.iter().any(|p| text.contains(p.as_str()))
                || self.file_paths.iter().any(|p| text.contains(p.as_str()))
                || self.domains.iter().any(|d| text.contains(d.as_str()))
                || self.ips.iter().any(|ip| text.contains(ip.as_str()))
        };
        if mentions(cmdline) {
            return true;
        }
        // Attack command lines hide their semantics behind Base64.
        if let Ok(decoded) = base64::engine::general_purpose::STANDARD.decode(cmdline) {
            if let Ok(text) = String::from_utf8(decoded) {
                return mentions(&text);
            }
        }
        false
    }

    /// True when the event names any IOC member through its subject,
    /// object, or (possibly Base64-encoded) command lines.
    pub fn event_references(&self, event: &Event) -> bool {
        self.attrs_reference(&event.subject) || self.attrs_reference(&event.object)
    }

    pub fn is_empty(&self) -> bool {
        self.process_paths.is_empty()
            && self.file_paths.is_empty()
            && self.registry_paths.is_empty()
            && self.domains.is_empty()
            && self.ips.is_empty()
    }
}

/// One recountable template step: `count` events in the day match
/// (action, subject_path?, object_key?) exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCount {
    pub template: String,
    pub step: String,
    pub action: ActionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject_path: Option<String>,
    /// Strategy-independent entity key of the object, when the step is
    /// keyed to one object.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object_key: Option<String>,
    pub count: u64,
}

impl StepCount {
    /// Recounts matching events; the manifest invariant is that this equals
    /// `self.count` on the day it was recorded for.
    pub fn recount(&self, events: &[Event]) -> u64 {
        events
            .iter()
            .filter(|e| {
                e.action == self.action
                    && self
                        .subject_path
                        .as_deref()
                        .is_none_or(|p| e.subject.path.as_deref() == Some(p))
                    && self
                        .object_key
                        .as_deref()
                        .is_none_or(|k| entity_key(&e.object).ok().as_deref() == Some(k))
            })
            .count() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayRole {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayManifest {
    pub file: String,
    pub role: DayRole,
    /// Index within the role, 0-based.
    pub day_index: u32,
    pub events: u64,
    pub malicious_events: u64,
    /// Attack events exported with stripped labels (pre-deployment
    /// training-day injections).
    pub covert_attack_events: u64,
    pub steps: Vec<StepCount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparse_scale: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmdlineNote {
    pub encoded: String,
    pub plaintext: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub catalog_version: u32,
    pub spec: ScenarioSpec,
    pub days: Vec<DayManifest>,
    pub iocs: IocSet,
    pub base64_cmdlines: Vec<CmdlineNote>,
}

/// Per-day emission context. Every event flows through [`DayBuilder::emit`]
/// so that timestamps stay monotone and labels come from one place.
pub struct DayBuilder {
    pub rng: ChaCha12Rng,
    ts: i64,
    events: Vec<Event>,
    iocs: IocSet,
    /// Strip malicious labels (training days being poisoned covertly).
    covert: bool,
    covert_count: u64,
    steps: Vec<StepCount>,
    cmdline_notes: Vec<CmdlineNote>,
}

impl DayBuilder {
    fn new(spec_seed: u64, role: DayRole, day_index: u32, global_day: u32, iocs: IocSet) -> Self {
        let role_tag = match role {
            DayRole::Train => "train",
            DayRole::Test => "test",
        };
        let seed = fnv1a64(format!("{spec_seed}/{role_tag}/{day_index}").as_bytes());
        DayBuilder {
            rng: ChaCha12Rng::seed_from_u64(seed),
            ts: global_day as i64 * 86_400_000_000_000,
            events: Vec::new(),
            iocs,
            covert: false,
            covert_count: 0,
            steps: Vec::new(),
            cmdline_notes: Vec::new(),
        }
    }

    pub fn set_covert(&mut self, covert: bool) {
        self.covert = covert;
    }

    pub fn emit(&mut self, subject: EntityAttrs, action: ActionKind, object: EntityAttrs) {
        self.ts += self.rng.random_range(50_000..2_000_000);
        let mut event = Event::new(self.ts, subject, action, object);
        if self.iocs.event_references(&event) {
            if self.covert {
                self.covert_count += 1;
            } else {
                event.label = Label::Malicious;
            }
        }
        self.events.push(event);
    }

    pub fn fresh_pid(&mut self) -> u32 {
        self.rng.random_range(1_000..60_000)
    }

    /// Base64-encodes an attack command line and records the mapping.
    pub fn encode_cmdline(&mut self, plaintext: &str) -> String {
        let encoded = base64::engine::general_purpose::STANDARD.encode(plaintext);
        self.cmdline_notes.push(CmdlineNote {
            encoded: encoded.clone(),
            plaintext: plaintext.to_string(),
        });
        encoded
    }

    pub fn record_step(&mut self, step: StepCount) {
        self.steps.push(step);
    }

    pub fn events_so_far(&self) -> usize {
        self.events.len()
    }

    fn finish(
        mut self,
        file: String,
        role: DayRole,
        day_index: u32,
    ) -> (Vec<Event>, DayManifest, Vec<CmdlineNote>) {
        for (i, e) in self.events.iter_mut().enumerate() {
            e.seq = i as u64;
        }
        let malicious = self
            .events
            .iter()
            .filter(|e| e.label.is_malicious())
            .count() as u64;
        let manifest = DayManifest {
            file,
            role,
            day_index,
            events: self.events.len() as u64,
            malicious_events: malicious,
            covert_attack_events: self.covert_count,
            steps: std::mem::take(&mut self.steps),
            sparse_scale: None,
        };
        (self.events, manifest, self.cmdline_notes)
    }
}

/// Fully generated scenario, still in memory.
#[derive(Debug, Clone)]
pub struct GeneratedScenario {
    pub train: Vec<Vec<Event>>,
    pub test: Vec<Vec<Event>>,
    pub iocs: IocSet,
    pub manifest: Manifest,
}

/// Number of run-script events the sparse archetype emits on test days.
pub const SPARSE_TEST_SCALE: u32 = 1_100;
/// Number of run-script events the sparse archetype emits on train days.
pub const SPARSE_TRAIN_SCALE: u32 = 40;

fn ioc_set(spec: &ScenarioSpec) -> IocSet {
    let mut iocs = IocSet::default();
    for attack in &spec.attacks {
        match attack {
            AttackKind::Mining => attack::mining_iocs(&mut iocs),
            AttackKind::InfoStealing => attack::info_stealing_iocs(&mut iocs),
            AttackKind::Backdoor => attack::backdoor_iocs(&mut iocs),
        }
    }
    iocs
}

fn build_day(
    spec: &ScenarioSpec,
    catalog: &Catalog,
    iocs: &IocSet,
    role: DayRole,
    day_index: u32,
    global_day: u32,
) -> (Vec<Event>, DayManifest, Vec<CmdlineNote>) {
    let mut day = DayBuilder::new(spec.seed, role, day_index, global_day, iocs.clone());
    let is_test = role == DayRole::Test;

    benign::emit_catalog_day(&mut day, catalog, spec, global_day);

    if spec.host_profile == HostProfile::EverChanging {
        benign::emit_churn(&mut day, global_day);
    }

    let mut sparse_scale = None;
    if spec.fp_archetypes.contains(&FpArchetype::Sparse) {
        let volume = if is_test {
            SPARSE_TEST_SCALE
        } else {
            SPARSE_TRAIN_SCALE
        };
        benign::emit_sparse_host(&mut day, global_day, is_test, volume);
        sparse_scale = Some(volume);
    }
    if spec.fp_archetypes.contains(&FpArchetype::SemanticChange) {
        benign::emit_semantic_reporter(&mut day, is_test, global_day);
    }
    if is_test && spec.fp_archetypes.contains(&FpArchetype::Unknown) {
        benign::emit_unknown_fleet(&mut day, day_index);
    }

    for attack in &spec.attacks {
        match attack {
            AttackKind::Mining => {
                if is_test {
                    attack::mining_template(&mut day, spec.attack_divergence, day_index == 0);
                }
            }
            AttackKind::Backdoor => {
                if is_test {
                    attack::backdoor_template(&mut day, spec.attack_divergence);
                }
            }
            AttackKind::InfoStealing => {
                if is_test {
                    attack::info_stealing_template(&mut day, false);
                } else if spec.pre_deployment {
                    day.set_covert(true);
                    attack::info_stealing_template(&mut day, true);
                    day.set_covert(false);
                }
            }
        }
    }

    let file = match role {
        DayRole::Train => format!("train_{:02}.jsonl", day_index + 1),
        DayRole::Test => format!("test_{:02}.jsonl", day_index + 1),
    };
    let (events, mut manifest, notes) = day.finish(file, role, day_index);
    manifest.sparse_scale = sparse_scale;
    (events, manifest, notes)
}

/// Generates all day traces for a spec, in memory.
pub fn generate_events(spec: &ScenarioSpec) -> Result<GeneratedScenario> {
    spec.validate()?;
    let catalog = Catalog::builtin()?;
    let iocs = ioc_set(spec);

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut days = Vec::new();
    let mut notes = Vec::new();
    let mut global_day = 0u32;
    for d in 0..spec.train_days {
        let (events, manifest, day_notes) =
            build_day(spec, &catalog, &iocs, DayRole::Train, d, global_day);
        train.push(events);
        days.push(manifest);
        notes.extend(day_notes);
        global_day += 1;
    }
    for d in 0..spec.days {
        let (events, manifest, day_notes) =
            build_day(spec, &catalog, &iocs, DayRole::Test, d, global_day);
        test.push(events);
        days.push(manifest);
        notes.extend(day_notes);
        global_day += 1;
    }

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        catalog_version: catalog.version,
        spec: spec.clone(),
        days,
        iocs: iocs.clone(),
        base64_cmdlines: notes,
    };
    Ok(GeneratedScenario {
        train,
        test,
        iocs,
        manifest,
    })
}

/// Files written by [`generate`].
#[derive(Debug, Clone)]
pub struct GenOutput {
    pub train_files: Vec<PathBuf>,
    pub test_files: Vec<PathBuf>,
    pub manifest_file: PathBuf,
    pub iocs_file: PathBuf,
    pub scenario: GeneratedScenario,
}

/// Generates and writes per-day trace files plus `manifest.json` and
/// `iocs.json` under `out_dir`.
pub fn generate(spec: &ScenarioSpec, out_dir: &Path) -> Result<GenOutput> {
    let scenario = generate_events(spec)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("create trace dir {}", out_dir.display()))?;

    let mut train_files = Vec::new();
    let mut test_files = Vec::new();
    for m in &scenario.manifest.days {
        let path = out_dir.join(&m.file);
        let events = match m.role {
            DayRole::Train => &scenario.train[m.day_index as usize],
            DayRole::Test => &scenario.test[m.day_index as usize],
        };
        write_trace_file(&path, events)
            .with_context(|| format!("write trace {}", path.display()))?;
        match m.role {
            DayRole::Train => train_files.push(path),
            DayRole::Test => test_files.push(path),
        }
    }

    let manifest_file = out_dir.join("manifest.json");
    fs::write(
        &manifest_file,
        serde_json::to_string_pretty(&scenario.manifest)?,
    )?;
    let iocs_file = out_dir.join("iocs.json");
    fs::write(&iocs_file, serde_json::to_string_pretty(&scenario.iocs)?)?;

    Ok(GenOutput {
        train_files,
        test_files,
        manifest_file,
        iocs_file,
        scenario,
    })
}
