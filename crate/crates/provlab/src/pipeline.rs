//! Staged pipeline: generate -> build -> detect -> reduce-fp -> evaluate,
//! with per-stage timing, reproducible run directories, and the
//! strategy-sweep and distance-analysis entry points.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use provlab_core::detector::{
    apply_threshold, day_out_threshold, train_days, DetectorModel, Verdict,
};
use provlab_core::event::unknown_behavior_stats;
use provlab_core::event::{EntityKind, Event, Label};
use provlab_core::features::{distance_ratio, Aggregate, DistanceRatio, TupleUniverse};
use provlab_core::fp_reduction::{
    flag_false_positives, louvain, profile, similarity_graph, tfidf, Community, FlagReport,
};
use provlab_core::graph::{graph_stats, GraphStats, NodeUuid, ProvGraph, StrategyPreset};
use provlab_core::metrics::{eval_report, EvalReport};

use crate::export;
use crate::gen::{self, ScenarioSpec};
use crate::trace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoWord {
    Auto,
}

/// Detection threshold: a fixed value or train-calibrated ("auto").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdCfg {
    Value(f64),
    Auto(AutoWord),
}

impl Default for ThresholdCfg {
    fn default() -> Self {
        ThresholdCfg::Auto(AutoWord::Auto)
    }
}

impl ThresholdCfg {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(ThresholdCfg::Auto(AutoWord::Auto))
        } else {
            Ok(ThresholdCfg::Value(s.parse::<f64>().with_context(
                || format!("threshold must be `auto` or a number, got `{s}`"),
            )?))
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_fp_threshold() -> usize {
    20
}
fn default_knn() -> usize {
    10
}
fn default_k() -> usize {
    2
}
fn default_cap() -> usize {
    100
}
fn default_idmap() -> String {
    "default".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpReductionCfg {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_fp_threshold")]
    pub threshold: usize,
    #[serde(default = "default_knn")]
    pub knn: usize,
}

impl Default for FpReductionCfg {
    fn default() -> Self {
        FpReductionCfg {
            enabled: true,
            threshold: default_fp_threshold(),
            knn: default_knn(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceInputs {
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
}

/// Full run configuration; serialized verbatim into the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traces: Option<TraceInputs>,
    #[serde(default = "default_idmap")]
    pub idmap: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub threshold: ThresholdCfg,
    #[serde(default)]
    pub fp_reduction: FpReductionCfg,
    #[serde(default = "default_true")]
    pub export_graphs: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            traces: None,
            idmap: default_idmap(),
            k: default_k(),
            cap: default_cap(),
            threshold: ThresholdCfg::default(),
            fp_reduction: FpReductionCfg::default(),
            export_graphs: true,
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn preset(&self) -> Result<StrategyPreset> {
        StrategyPreset::parse(&self.idmap)
            .with_context(|| format!("unknown idmap preset `{}`", self.idmap))
    }

    pub fn validate(&self) -> Result<()> {
        self.preset()?;
        ensure!(
            self.scenario.is_some() != self.traces.is_some(),
            "config needs exactly one of `scenario` or `traces`"
        );
        ensure!(self.k >= 1, "k must be at least 1");
        ensure!(self.cap >= 1, "cap must be at least 1");
        ensure!(
            self.fp_reduction.threshold >= 1,
            "fp threshold must be >= 1"
        );
        ensure!(self.fp_reduction.knn >= 1, "knn must be >= 1");
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text =
            fs::read_to_string(path).with_context(|| format!("read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }
}

/// Per-stage wall-clock records, written as timing.csv.
#[derive(Debug, Default)]
pub struct Timing {
    rows: Vec<(String, Option<u32>, f64)>,
}

impl Timing {
    pub fn record(&mut self, stage: &str, day: Option<u32>, seconds: f64) {
        self.rows.push((stage.to_string(), day, seconds));
    }

    pub fn time<T>(&mut self, stage: &str, day: Option<u32>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(stage, day, start.elapsed().as_secs_f64());
        out
    }

    pub fn seconds_for(&self, stage: &str) -> f64 {
        self.rows
            .iter()
            .filter(|(s, _, _)| s == stage)
            .map(|(_, _, t)| t)
            .sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["stage", "day", "seconds"])?;
        for (stage, day, seconds) in &self.rows {
            w.write_record([
                stage.clone(),
                day.map(|d| d.to_string()).unwrap_or_default(),
                format!("{seconds:.6}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DayReport {
    pub day: u32,
    pub graph: GraphStats,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub tool_version: String,
    pub idmap: String,
    pub k: usize,
    pub cap: usize,
    pub threshold: f64,
    pub train_graphs: Vec<GraphStats>,
    pub model_vectors: usize,
    pub days: Vec<DayReport>,
    /// Pooled over all test days.
    pub overall: EvalReport,
}

/// Process-population evaluation of one day, before and after community
/// flagging withdrew alerts. The reducer is process-scoped, so its effect
/// is measured over process nodes.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedDayReport {
    pub day: u32,
    pub alerted_processes: u64,
    pub community_count: usize,
    pub flagged_processes: u64,
    pub process_eval_before: EvalReport,
    pub process_eval_after: EvalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedReport {
    pub community_threshold: usize,
    pub knn: usize,
    pub days: Vec<ReducedDayReport>,
}

/// Outcome of one full pipeline run.
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub report: PipelineReport,
    pub reduced: Option<ReducedReport>,
    pub timing: Timing,
}

struct DayDetection {
    day: u32,
    events: Vec<Event>,
    graph: ProvGraph,
    verdicts: Vec<Verdict>,
    entity_of: BTreeMap<NodeUuid, String>,
    timings: Vec<(String, f64)>,
}

fn detect_day(
    day: u32,
    path: &Path,
    preset: StrategyPreset,
    model: &DetectorModel,
    threshold: f64,
) -> Result<DayDetection> {
    let mut timings = Vec::new();
    let start = Instant::now();
    let events = trace::parse_trace_file(path)
        .with_context(|| format!("parse test trace {}", path.display()))?;
    timings.push(("parse_test".to_string(), start.elapsed().as_secs_f64()));

    let start = Instant::now();
    let graph = ProvGraph::build(&events, &preset.strategy())
        .map_err(|e| anyhow::anyhow!("build test graph day {day}: {e}"))?;
    timings.push((
        "build_graph_test".to_string(),
        start.elapsed().as_secs_f64(),
    ));

    let start = Instant::now();
    let scores = model
        .score_all(&graph)
        .map_err(|e| anyhow::anyhow!("score day {day}: {e}"))?;
    let verdicts = apply_threshold(&scores, &graph, threshold);
    timings.push(("score".to_string(), start.elapsed().as_secs_f64()));

    let entity_of = graph.entity_map();
    Ok(DayDetection {
        day,
        events,
        graph,
        verdicts,
        entity_of,
        timings,
    })
}

fn process_level_report(
    detection: &DayDetection,
    withdrawn: &BTreeSet<String>,
) -> Result<EvalReport> {
    let process_verdicts: Vec<Verdict> = detection
        .verdicts
        .iter()
        .filter(|v| {
            detection
                .graph
                .index_of(v.uuid)
                .map(|i| detection.graph.node(i).kind == EntityKind::Process)
                .unwrap_or(false)
        })
        .map(|v| {
            let mut v = v.clone();
            if v.predicted.is_malicious() {
                if let Some(entity) = detection.entity_of.get(&v.uuid) {
                    if withdrawn.contains(entity) {
                        v.predicted = Label::Benign;
                    }
                }
            }
            v
        })
        .collect();
    eval_report(&process_verdicts, &detection.entity_of).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Clustering artifacts of one reduced day, absent when there was nothing
/// to cluster.
type DayClustering = Option<(FlagReport, Vec<Community>)>;

fn reduce_day(
    detection: &DayDetection,
    cfg: &FpReductionCfg,
) -> Result<(ReducedDayReport, DayClustering)> {
    // Alerted process entities of this day. Only processes that act as
    // subjects have behaviors to cluster on; exec-target-only processes
    // stay alerted and are never withdrawn.
    let subjects: BTreeSet<String> = detection
        .events
        .iter()
        .filter_map(|e| provlab_core::graph::entity_key(&e.subject).ok())
        .collect();
    let alerted: BTreeSet<String> = detection
        .verdicts
        .iter()
        .filter(|v| v.predicted.is_malicious())
        .filter_map(|v| detection.entity_of.get(&v.uuid))
        .filter(|e| e.starts_with("process:") && subjects.contains(*e))
        .cloned()
        .collect();

    let before = process_level_report(detection, &BTreeSet::new())?;

    if alerted.len() < 2 {
        // Nothing to cluster; reduction is a no-op.
        let report = ReducedDayReport {
            day: detection.day,
            alerted_processes: alerted.len() as u64,
            community_count: alerted.len(),
            flagged_processes: 0,
            process_eval_after: before.clone(),
            process_eval_before: before,
        };
        return Ok((report, None));
    }

    let profiles =
        profile(&detection.events, &alerted).map_err(|e| anyhow::anyhow!("profile: {e}"))?;
    let vectors = tfidf(&profiles);
    let graph = similarity_graph(&vectors, cfg.knn)
        .map_err(|e| anyhow::anyhow!("similarity graph: {e}"))?;
    let communities = louvain(&graph);
    let flags = flag_false_positives(&communities, cfg.threshold);

    let after = process_level_report(detection, &flags.fp_processes)?;
    let report = ReducedDayReport {
        day: detection.day,
        alerted_processes: alerted.len() as u64,
        community_count: flags.community_count,
        flagged_processes: flags.fp_processes.len() as u64,
        process_eval_before: before,
        process_eval_after: after,
    };
    Ok((report, Some((flags, communities))))
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("read {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Runs the full pipeline into `out_dir`, producing the audit-friendly run
/// layout: config.json, traces/, graphs/, verdicts.csv, report.json,
/// report_reduced.json, timing.csv, checksums.json.
pub fn run_pipeline(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    let preset = config.preset()?;
    fs::create_dir_all(out_dir)?;
    export::write_json(&out_dir.join("config.json"), config)
        .context("stage config: write config.json")?;

    let mut timing = Timing::default();

    // Stage: trace acquisition.
    let (train_paths, test_paths) = if let Some(spec) = &config.scenario {
        let traces_dir = out_dir.join("traces");
        let gen_out = timing
            .time("gen_traces", None, || gen::generate(spec, &traces_dir))
            .context("stage gen-traces")?;
        (gen_out.train_files, gen_out.test_files)
    } else {
        let inputs = config.traces.as_ref().expect("validated");
        (inputs.train.clone(), inputs.test.clone())
    };

    // Stage: training side. One graph per training day; the model unions
    // the per-day vector sets.
    let train_day_events: Vec<Vec<Event>> = timing
        .time("parse_train", None, || {
            train_paths
                .iter()
                .map(|p| trace::parse_trace_file(p))
                .collect::<Result<Vec<_>, _>>()
        })
        .context("stage parse-train")?;
    let train_graphs: Vec<ProvGraph> = timing
        .time("build_graph_train", None, || {
            train_day_events
                .iter()
                .map(|events| ProvGraph::build(events, &preset.strategy()))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| anyhow::anyhow!("stage build-graph (train): {e}"))?;
    let train_graph_refs: Vec<&ProvGraph> = train_graphs.iter().collect();
    let model = timing
        .time("train", None, || {
            train_days(&train_graph_refs, config.k, config.cap)
        })
        .map_err(|e| anyhow::anyhow!("stage train: {e}"))?;
    let threshold = timing
        .time("calibrate", None, || match config.threshold {
            ThresholdCfg::Value(v) => Ok(v),
            ThresholdCfg::Auto(_) => {
                if train_graphs.len() >= 2 {
                    day_out_threshold(&train_graph_refs, config.k, config.cap, 95.0)
                        .map_err(|e| anyhow::anyhow!("{e}"))
                } else {
                    Ok(model.default_threshold())
                }
            }
        })
        .context("stage calibrate")?;

    // Stage: per-day detection, parallel across days.
    let detections: Vec<DayDetection> = timing
        .time("detect_all_days", None, || {
            test_paths
                .par_iter()
                .enumerate()
                .map(|(i, path)| detect_day(i as u32 + 1, path, preset, &model, threshold))
                .collect::<Result<Vec<_>>>()
        })
        .context("stage detect")?;
    for d in &detections {
        for (stage, seconds) in &d.timings {
            timing.record(stage, Some(d.day), *seconds);
        }
    }

    // Stage: graph exports.
    if config.export_graphs {
        timing
            .time("export_graphs", None, || -> Result<()> {
                let graphs_dir = out_dir.join("graphs");
                fs::create_dir_all(&graphs_dir)?;
                for (i, g) in train_graphs.iter().enumerate() {
                    export::write_nodes_csv(
                        &graphs_dir.join(format!("train_{:02}_nodes.csv", i + 1)),
                        g,
                    )?;
                    export::write_edges_csv(
                        &graphs_dir.join(format!("train_{:02}_edges.csv", i + 1)),
                        g,
                    )?;
                }
                for d in &detections {
                    export::write_nodes_csv(
                        &graphs_dir.join(format!("test_{:02}_nodes.csv", d.day)),
                        &d.graph,
                    )?;
                    export::write_edges_csv(
                        &graphs_dir.join(format!("test_{:02}_edges.csv", d.day)),
                        &d.graph,
                    )?;
                }
                Ok(())
            })
            .context("stage export-graphs")?;
    }

    // Stage: verdicts export.
    timing
        .time("export_verdicts", None, || {
            let rows: Vec<export::DayVerdicts<'_>> = detections
                .iter()
                .map(|d| (d.day, d.verdicts.as_slice(), &d.entity_of))
                .collect();
            export::write_verdicts_csv(&out_dir.join("verdicts.csv"), &rows)
        })
        .context("stage export-verdicts")?;

    // Stage: evaluation.
    let report = timing
        .time("evaluate", None, || -> Result<PipelineReport> {
            let mut days = Vec::new();
            let mut pooled: Vec<Verdict> = Vec::new();
            let mut pooled_entities: BTreeMap<NodeUuid, String> = BTreeMap::new();
            for d in &detections {
                let eval = eval_report(&d.verdicts, &d.entity_of)
                    .map_err(|e| anyhow::anyhow!("evaluate day {}: {e}", d.day))?;
                days.push(DayReport {
                    day: d.day,
                    graph: graph_stats(&d.graph),
                    eval,
                });
                pooled.extend(d.verdicts.iter().cloned());
                pooled_entities.extend(d.entity_of.clone());
            }
            let overall = eval_report(&pooled, &pooled_entities)
                .map_err(|e| anyhow::anyhow!("evaluate pooled: {e}"))?;
            Ok(PipelineReport {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                idmap: preset.name().to_string(),
                k: config.k,
                cap: config.cap,
                threshold,
                train_graphs: train_graphs.iter().map(graph_stats).collect(),
                model_vectors: model.vector_count(),
                days,
                overall,
            })
        })
        .context("stage evaluate")?;
    export::write_json(&out_dir.join("report.json"), &report)
        .context("stage evaluate: write report.json")?;

    // Stage: FP reduction.
    let reduced = if config.fp_reduction.enabled {
        let reduced = timing
            .time("reduce_fp", None, || -> Result<ReducedReport> {
                let mut day_reports = Vec::new();
                let mut community_rows = Vec::new();
                for d in &detections {
                    let (report, flags) = reduce_day(d, &config.fp_reduction)?;
                    day_reports.push(report);
                    if let Some(pair) = flags {
                        community_rows.push((d.day, pair));
                    }
                }
                let rows: Vec<(u32, &FlagReport, &[Community])> = community_rows
                    .iter()
                    .map(|(day, (flags, communities))| (*day, flags, communities.as_slice()))
                    .collect();
                export::write_communities_csv(&out_dir.join("fp_communities.csv"), &rows)?;
                Ok(ReducedReport {
                    community_threshold: config.fp_reduction.threshold,
                    knn: config.fp_reduction.knn,
                    days: day_reports,
                })
            })
            .context("stage reduce-fp")?;
        export::write_json(&out_dir.join("report_reduced.json"), &reduced)
            .context("stage reduce-fp: write report_reduced.json")?;
        Some(reduced)
    } else {
        None
    };

    // Summary CSV row in the evaluation-table layout.
    export::write_summary_csv(
        &out_dir.join("summary.csv"),
        &[("type-vector-nn".to_string(), &report.overall)],
    )
    .context("stage evaluate: write summary.csv")?;

    timing.write_csv(&out_dir.join("timing.csv"))?;

    // Checksums for byte-exact replay auditing.
    let mut checksums: BTreeMap<String, String> = BTreeMap::new();
    let mut artifacts: Vec<PathBuf> = vec![
        out_dir.join("config.json"),
        out_dir.join("verdicts.csv"),
        out_dir.join("report.json"),
    ];
    if config.fp_reduction.enabled {
        artifacts.push(out_dir.join("report_reduced.json"));
    }
    artifacts.extend(train_paths.iter().cloned());
    artifacts.extend(test_paths.iter().cloned());
    for artifact in artifacts {
        if artifact.exists() {
            checksums.insert(
                artifact
                    .strip_prefix(out_dir)
                    .unwrap_or(&artifact)
                    .to_string_lossy()
                    .to_string(),
                sha256_hex(&artifact)?,
            );
        }
    }
    export::write_json(&out_dir.join("checksums.json"), &checksums)?;

    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        report,
        reduced,
        timing,
    })
}

/// One row of the strategy sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub strategy: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub auc: Option<f64>,
    pub train_time: f64,
    pub test_time: f64,
}

/// Evaluates all six presets over one scenario: dataset-wide node/edge
/// counts plus detection AUC and stage times per preset.
pub fn sweep_idmap(config: &RunConfig, out_dir: &Path) -> Result<Vec<SweepRow>> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;

    let (train_paths, test_paths) = if let Some(spec) = &config.scenario {
        let gen_out = gen::generate(spec, &out_dir.join("traces")).context("stage gen-traces")?;
        (gen_out.train_files, gen_out.test_files)
    } else {
        let inputs = config.traces.as_ref().expect("validated");
        (inputs.train.clone(), inputs.test.clone())
    };
    let mut all_events: Vec<Event> = Vec::new();
    let mut train_day_events: Vec<Vec<Event>> = Vec::new();
    for path in &train_paths {
        let events =
            trace::parse_trace_file(path).with_context(|| format!("parse {}", path.display()))?;
        all_events.extend(events.iter().cloned());
        train_day_events.push(events);
    }
    let mut test_days: Vec<Vec<Event>> = Vec::new();
    for path in &test_paths {
        let events =
            trace::parse_trace_file(path).with_context(|| format!("parse {}", path.display()))?;
        all_events.extend(events.iter().cloned());
        test_days.push(events);
    }

    let mut rows = Vec::new();
    for preset in StrategyPreset::ALL {
        let strategy = preset.strategy();
        // Dataset-wide counts over train and test together.
        let union_graph = ProvGraph::build(&all_events, &strategy)
            .map_err(|e| anyhow::anyhow!("sweep {}: {e}", preset))?;

        let start = Instant::now();
        let train_graphs = train_day_events
            .iter()
            .map(|events| ProvGraph::build(events, &strategy))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow::anyhow!("sweep {}: {e}", preset))?;
        let refs: Vec<&ProvGraph> = train_graphs.iter().collect();
        let model = train_days(&refs, config.k, config.cap)
            .map_err(|e| anyhow::anyhow!("sweep {}: {e}", preset))?;
        let train_time = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let mut scores: Vec<(f64, Label)> = Vec::new();
        for events in &test_days {
            let g = ProvGraph::build(events, &strategy)
                .map_err(|e| anyhow::anyhow!("sweep {}: {e}", preset))?;
            let day_scores = model
                .score_all(&g)
                .map_err(|e| anyhow::anyhow!("sweep {}: {e}", preset))?;
            for (uuid, score) in day_scores {
                let label = g.node(g.index_of(uuid).unwrap()).label;
                scores.push((score, label));
            }
        }
        let test_time = start.elapsed().as_secs_f64();
        let auc = provlab_core::metrics::auc(&scores).ok();

        rows.push(SweepRow {
            strategy: preset.name().to_string(),
            node_count: union_graph.node_count(),
            edge_count: union_graph.edge_count(),
            auc,
            train_time,
            test_time,
        });
    }

    let mut w = csv::Writer::from_path(out_dir.join("sweep.csv"))?;
    w.write_record([
        "strategy",
        "node_count",
        "edge_count",
        "auc",
        "train_time",
        "test_time",
    ])?;
    for row in &rows {
        w.write_record([
            row.strategy.clone(),
            row.node_count.to_string(),
            row.edge_count.to_string(),
            row.auc.map(|a| format!("{a:.6}")).unwrap_or_default(),
            format!("{:.6}", row.train_time),
            format!("{:.6}", row.test_time),
        ])?;
    }
    w.flush()?;
    export::write_json(&out_dir.join("sweep.json"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    pub idmap: String,
    pub k: usize,
    pub cap: usize,
    pub aggregate: Aggregate,
    pub ratio: DistanceRatio,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unknown_behavior: Option<UnknownBehaviorSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnknownBehaviorSummary {
    pub processes: usize,
    pub mean_unknown_ratio: f64,
    pub fully_unknown_fraction: f64,
    pub cdf: Vec<(f64, f64)>,
}

/// Distance-ratio analysis between a train and a test trace, optionally
/// with the per-process unknown-behavior distribution.
#[allow(clippy::too_many_arguments)]
pub fn analyze_distance(
    train_paths: &[PathBuf],
    test_paths: &[PathBuf],
    preset: StrategyPreset,
    k: usize,
    cap: usize,
    aggregate: Aggregate,
    with_unknown: bool,
    out_dir: &Path,
) -> Result<DistanceReport> {
    fs::create_dir_all(out_dir)?;
    let train_events = trace::parse_trace_files(train_paths).context("parse train traces")?;
    let test_events = trace::parse_trace_files(test_paths).context("parse test traces")?;
    let strategy = preset.strategy();
    let g_train = ProvGraph::build(&train_events, &strategy)
        .map_err(|e| anyhow::anyhow!("build train graph: {e}"))?;
    let g_test = ProvGraph::build(&test_events, &strategy)
        .map_err(|e| anyhow::anyhow!("build test graph: {e}"))?;
    let ratio = distance_ratio(&g_train, &g_test, k, cap, aggregate)
        .map_err(|e| anyhow::anyhow!("distance ratio: {e}"))?;

    let unknown_behavior = if with_unknown {
        let stats = unknown_behavior_stats(&train_events, &test_events, &strategy)
            .map_err(|e| anyhow::anyhow!("unknown-behavior stats: {e}"))?;
        let mut w = csv::Writer::from_path(out_dir.join("unknown_stats.csv"))?;
        w.write_record(["process", "unknown_ratio"])?;
        for (process, ratio) in &stats.per_process {
            w.write_record([process.clone(), ratio.to_string()])?;
        }
        w.flush()?;
        let n = stats.per_process.len();
        let mean = stats.per_process.values().sum::<f64>() / n.max(1) as f64;
        let fully =
            stats.per_process.values().filter(|r| **r >= 1.0).count() as f64 / n.max(1) as f64;
        Some(UnknownBehaviorSummary {
            processes: n,
            mean_unknown_ratio: mean,
            fully_unknown_fraction: fully,
            cdf: stats.cdf,
        })
    } else {
        None
    };

    // Feature dumps for offline inspection.
    let universe = TupleUniverse::from_graphs(&[&g_train, &g_test]);
    export::write_features_csv(
        &out_dir.join("features_train.csv"),
        &g_train,
        &universe,
        k,
        cap,
    )?;
    export::write_features_csv(
        &out_dir.join("features_test.csv"),
        &g_test,
        &universe,
        k,
        cap,
    )?;

    let report = DistanceReport {
        idmap: preset.name().to_string(),
        k,
        cap,
        aggregate,
        ratio,
        unknown_behavior,
    };
    export::write_json(&out_dir.join("distance.json"), &report)?;
    Ok(report)
}

/// Pearson correlation over an (x, y) pairs CSV, with an explicit
/// opt-in outlier drop by row index (never automatic). `exact_p` switches
/// the p-value to the exact permutation test (small samples only).
pub fn correlate_pairs(
    pairs_csv: &Path,
    drop_outlier: Option<usize>,
    exact_p: bool,
) -> Result<provlab_core::metrics::PearsonResult> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(pairs_csv)
        .with_context(|| format!("open {}", pairs_csv.display()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in reader.records() {
        let record = record?;
        xs.push(
            record
                .get(0)
                .context("pairs csv: missing x")?
                .parse::<f64>()?,
        );
        ys.push(
            record
                .get(1)
                .context("pairs csv: missing y")?
                .parse::<f64>()?,
        );
    }
    if let Some(i) = drop_outlier {
        ensure!(
            i < xs.len(),
            "drop-outlier index {i} out of range ({} rows)",
            xs.len()
        );
        xs.remove(i);
        ys.remove(i);
    }
    let result = if exact_p {
        provlab_core::metrics::pearson_permutation(&xs, &ys)
    } else {
        provlab_core::metrics::pearson(&xs, &ys)
    };
    result.map_err(|e| anyhow::anyhow!("{e}"))
}
