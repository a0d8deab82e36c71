//! `provlab` command-line interface.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use provlab::export;
use provlab::gen::{AttackKind, FpArchetype, HostProfile, ScenarioSpec};
use provlab::pipeline::{
    self, analyze_distance, correlate_pairs, run_pipeline, sweep_idmap, RunConfig, ThresholdCfg,
    TraceInputs,
};
use provlab::trace;
use provlab_core::features::Aggregate;
use provlab_core::fp_reduction::{flag_false_positives, louvain, profile, similarity_graph, tfidf};
use provlab_core::graph::{graph_stats, ProvGraph, StrategyPreset};
use provlab_core::metrics::eval_report;

/// Provenance-graph detection lab: generate synthetic traces, build graphs,
/// score anomalies, reduce false positives, and evaluate.
#[derive(Parser)]
#[command(name = "provlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn default_out(sub: &str) -> PathBuf {
    let root = std::env::var_os("PROVLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("provlab-out"));
    root.join(sub)
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario spec JSON; overrides the individual flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    train_days: u32,
    /// Number of test days.
    #[arg(long, default_value_t = 1)]
    test_days: u32,
    /// Host profile: stable | ever_changing.
    #[arg(long, default_value = "stable")]
    profile: String,
    /// Comma-separated attacks: none | backdoor,mining,info_stealing.
    #[arg(long, default_value = "none")]
    attacks: String,
    /// Comma-separated FP archetypes: none | sparse,unknown,semantic_change.
    #[arg(long, default_value = "none")]
    archetypes: String,
    /// Benign events per day.
    #[arg(long, default_value_t = 20_000)]
    scale: u32,
    /// Attack structural divergence in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    divergence: f64,
    /// Cloud-style process open/close imbalance knob (0 disables).
    #[arg(long, default_value_t = 0.0)]
    imbalance: f64,
    /// Keep info-stealing installation out of the training days.
    #[arg(long)]
    no_pre_deployment: bool,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioSpec> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("read scenario {}", path.display()))?;
            let spec: ScenarioSpec = serde_json::from_str(&text)
                .with_context(|| format!("parse scenario {}", path.display()))?;
            spec.validate()?;
            return Ok(spec);
        }
        let host_profile = match self.profile.as_str() {
            "stable" => HostProfile::Stable,
            "ever_changing" => HostProfile::EverChanging,
            other => bail!("unknown host profile `{other}`"),
        };
        let mut attacks = BTreeSet::new();
        for token in self
            .attacks
            .split(',')
            .filter(|t| !t.is_empty() && *t != "none")
        {
            attacks.insert(match token {
                "backdoor" => AttackKind::Backdoor,
                "mining" => AttackKind::Mining,
                "info_stealing" => AttackKind::InfoStealing,
                other => bail!("unknown attack `{other}`"),
            });
        }
        let mut fp_archetypes = BTreeSet::new();
        for token in self
            .archetypes
            .split(',')
            .filter(|t| !t.is_empty() && *t != "none")
        {
            fp_archetypes.insert(match token {
                "sparse" => FpArchetype::Sparse,
                "unknown" => FpArchetype::Unknown,
                "semantic_change" => FpArchetype::SemanticChange,
                other => bail!("unknown archetype `{other}`"),
            });
        }
        let spec = ScenarioSpec {
            seed: self.seed,
            train_days: self.train_days,
            days: self.test_days,
            host_profile,
            attacks,
            fp_archetypes,
            scale: self.scale,
            attack_divergence: self.divergence,
            imbalance: self.imbalance,
            pre_deployment: !self.no_pre_deployment,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic per-day traces, a manifest, and the IOC set.
    GenTraces {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a provenance graph from traces and export nodes/edges CSVs.
    BuildGraph {
        /// Trace file(s), concatenated in order. `.gz` accepted.
        #[arg(long, required = true)]
        trace: Vec<PathBuf>,
        /// UUID strategy preset: default | 1..5.
        #[arg(long, default_value = "default")]
        idmap: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on benign traces and score test traces into verdicts.csv.
    Detect {
        #[arg(long, required = true)]
        train: Vec<PathBuf>,
        #[arg(long, required = true)]
        test: Vec<PathBuf>,
        #[arg(long, default_value = "default")]
        idmap: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        cap: usize,
        /// `auto` (train-calibrated 95th percentile) or a number.
        #[arg(long, default_value = "auto")]
        threshold: String,
        /// Worker threads for per-day stages (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Also export per-graph nodes/edges CSVs.
        #[arg(long)]
        export_graphs: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster alerted processes and flag large communities as FPs.
    ReduceFp {
        /// verdicts.csv produced by `detect` or `run`.
        #[arg(long)]
        alerts: PathBuf,
        /// Trace file(s) backing the alerts, one per day in the CSV.
        #[arg(long, required = true)]
        trace: Vec<PathBuf>,
        /// Community size threshold (strictly larger communities flag).
        #[arg(long, default_value_t = 20)]
        threshold: usize,
        #[arg(long, default_value_t = 10)]
        knn: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the evaluation report from a verdicts.csv.
    Evaluate {
        #[arg(long)]
        verdicts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance-ratio analysis (and optional unknown-behavior stats), or
    /// Pearson correlation over an (x, y) pairs CSV.
    AnalyzeDistance {
        #[arg(long)]
        train: Vec<PathBuf>,
        #[arg(long)]
        test: Vec<PathBuf>,
        #[arg(long, default_value = "default")]
        idmap: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        cap: usize,
        /// mean | median
        #[arg(long, default_value = "mean")]
        aggregate: String,
        /// Also compute per-process unknown-behavior ratios and their CDF.
        #[arg(long)]
        unknown_stats: bool,
        /// Correlate an (x, y) pairs CSV instead of analyzing traces.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Drop one row (by 0-based index) before correlating. Explicit
        /// only; nothing is dropped automatically.
        #[arg(long)]
        drop_outlier: Option<usize>,
        /// Exact permutation p-value instead of the t approximation
        /// (samples of up to 10 pairs).
        #[arg(long)]
        exact_p: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate all six UUID strategies over one scenario.
    SweepIdmap {
        /// Run config JSON (scenario or traces).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline from a run config JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configure worker pool")?;
    }
    Ok(())
}

fn cmd_gen_traces(scenario: ScenarioArgs, out: Option<PathBuf>) -> Result<()> {
    let spec = scenario.resolve()?;
    let out = out.unwrap_or_else(|| default_out("traces"));
    let gen_out = provlab::gen::generate(&spec, &out).context("stage gen-traces")?;
    let total_days = gen_out.train_files.len() + gen_out.test_files.len();
    println!(
        "wrote {total_days} day trace(s), manifest, and IOC set under {}",
        out.display()
    );
    Ok(())
}

fn cmd_build_graph(traces: Vec<PathBuf>, idmap: String, out: Option<PathBuf>) -> Result<()> {
    let preset =
        StrategyPreset::parse(&idmap).with_context(|| format!("unknown idmap preset `{idmap}`"))?;
    let out = out.unwrap_or_else(|| default_out("graph"));
    std::fs::create_dir_all(&out)?;
    let events = trace::parse_trace_files(&traces).context("stage parse")?;
    let graph = ProvGraph::build(&events, &preset.strategy())
        .map_err(|e| anyhow::anyhow!("stage build-graph: {e}"))?;
    for warning in graph.collisions() {
        eprintln!("warning: {warning}");
    }
    export::write_nodes_csv(&out.join("nodes.csv"), &graph)?;
    export::write_edges_csv(&out.join("edges.csv"), &graph)?;
    let stats = graph_stats(&graph);
    export::write_json(&out.join("stats.json"), &stats)?;
    println!(
        "built graph: {} nodes, {} edges, {} entities -> {}",
        stats.node_count,
        stats.edge_count,
        stats.entity_count,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_detect(
    train: Vec<PathBuf>,
    test: Vec<PathBuf>,
    idmap: String,
    k: usize,
    cap: usize,
    threshold: String,
    export_graphs: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let out = out.unwrap_or_else(|| default_out("detect"));
    let config = RunConfig {
        scenario: None,
        traces: Some(TraceInputs { train, test }),
        idmap,
        k,
        cap,
        threshold: ThresholdCfg::parse(&threshold)?,
        fp_reduction: pipeline::FpReductionCfg {
            enabled: false,
            ..Default::default()
        },
        export_graphs,
        jobs: None,
    };
    let summary = run_pipeline(&config, &out)?;
    println!(
        "threshold {:.6}; overall tp={} fp={} tn={} fn={} -> {}",
        summary.report.threshold,
        summary.report.overall.tp,
        summary.report.overall.fp,
        summary.report.overall.tn,
        summary.report.overall.fn_,
        out.display()
    );
    Ok(())
}

fn cmd_reduce_fp(
    alerts: PathBuf,
    traces: Vec<PathBuf>,
    threshold: usize,
    knn: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let out = out.unwrap_or_else(|| default_out("reduce-fp"));
    std::fs::create_dir_all(&out)?;
    let rows = export::read_verdicts_csv(&alerts).context("stage read-alerts")?;
    let days: BTreeSet<u32> = rows.iter().map(|r| r.day).collect();
    if days.len() != traces.len() {
        bail!(
            "verdicts cover {} day(s) but {} trace file(s) given; pass one trace per day in day order",
            days.len(),
            traces.len()
        );
    }

    let mut day_reports = Vec::new();
    let mut community_rows = Vec::new();
    for (day, trace_path) in days.iter().zip(&traces) {
        let events = trace::parse_trace_file(trace_path)
            .with_context(|| format!("stage parse: {}", trace_path.display()))?;
        let subjects: BTreeSet<String> = events
            .iter()
            .filter_map(|e| provlab_core::graph::entity_key(&e.subject).ok())
            .collect();
        let day_rows: Vec<&export::VerdictRow> = rows.iter().filter(|r| r.day == *day).collect();
        let alerted: BTreeSet<String> = day_rows
            .iter()
            .filter(|r| r.verdict.predicted.is_malicious())
            .filter(|r| r.entity.starts_with("process:") && subjects.contains(&r.entity))
            .map(|r| r.entity.clone())
            .collect();
        if alerted.len() < 2 {
            println!(
                "day {day}: {} alerted process(es), nothing to cluster",
                alerted.len()
            );
            continue;
        }
        let profiles = profile(&events, &alerted)
            .map_err(|e| anyhow::anyhow!("stage profile (day {day}): {e}"))?;
        let vectors = tfidf(&profiles);
        let graph = similarity_graph(&vectors, knn)
            .map_err(|e| anyhow::anyhow!("stage similarity-graph (day {day}): {e}"))?;
        let communities = louvain(&graph);
        let flags = flag_false_positives(&communities, threshold);
        println!(
            "day {day}: {} alerted processes, {} communities, {} flagged as FP",
            alerted.len(),
            flags.community_count,
            flags.fp_processes.len()
        );
        day_reports.push(serde_json::json!({
            "day": day,
            "alerted_processes": alerted.len(),
            "community_count": flags.community_count,
            "flagged_processes": flags.fp_processes.len(),
            "flagged": flags.fp_processes,
        }));
        community_rows.push((*day, flags, communities));
    }
    let rows_ref: Vec<_> = community_rows
        .iter()
        .map(|(day, flags, communities)| (*day, flags, communities.as_slice()))
        .collect();
    export::write_communities_csv(&out.join("fp_communities.csv"), &rows_ref)?;
    export::write_json(&out.join("reduce_fp.json"), &day_reports)?;
    println!("wrote {}", out.join("fp_communities.csv").display());
    Ok(())
}

fn cmd_evaluate(verdicts: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let out = out.unwrap_or_else(|| default_out("evaluate"));
    std::fs::create_dir_all(&out)?;
    let rows = export::read_verdicts_csv(&verdicts).context("stage read-verdicts")?;
    if rows.is_empty() {
        bail!("stage evaluate: empty verdict set");
    }
    let entity_of = rows
        .iter()
        .map(|r| (r.verdict.uuid, r.entity.clone()))
        .collect();
    let all: Vec<_> = rows.iter().map(|r| r.verdict.clone()).collect();
    let report =
        eval_report(&all, &entity_of).map_err(|e| anyhow::anyhow!("stage evaluate: {e}"))?;
    export::write_json(&out.join("report.json"), &report)?;
    export::write_summary_csv(
        &out.join("summary.csv"),
        &[("type-vector-nn".to_string(), &report)],
    )?;
    println!(
        "tp={} tn={} fp={} fn={} tpr={:?} fpr={:?} auc={:?} -> {}",
        report.tp,
        report.tn,
        report.fp,
        report.fn_,
        report.tpr,
        report.fpr,
        report.auc,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze_distance(
    train: Vec<PathBuf>,
    test: Vec<PathBuf>,
    idmap: String,
    k: usize,
    cap: usize,
    aggregate: String,
    unknown_stats: bool,
    pairs: Option<PathBuf>,
    drop_outlier: Option<usize>,
    exact_p: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let out = out.unwrap_or_else(|| default_out("analyze"));
    if let Some(pairs_csv) = pairs {
        let result = correlate_pairs(&pairs_csv, drop_outlier, exact_p)?;
        std::fs::create_dir_all(&out)?;
        export::write_json(&out.join("correlation.json"), &result)?;
        println!("pearson r={:.6} p={:.6}", result.r, result.p_value);
        return Ok(());
    }
    if train.is_empty() || test.is_empty() {
        bail!("analyze-distance needs --train and --test traces (or --pairs)");
    }
    let preset =
        StrategyPreset::parse(&idmap).with_context(|| format!("unknown idmap preset `{idmap}`"))?;
    let aggregate = match aggregate.as_str() {
        "mean" => Aggregate::Mean,
        "median" => Aggregate::Median,
        other => bail!("aggregate must be mean or median, got `{other}`"),
    };
    let report = analyze_distance(
        &train,
        &test,
        preset,
        k,
        cap,
        aggregate,
        unknown_stats,
        &out,
    )?;
    if report.ratio.degenerate {
        eprintln!("warning: both class distance aggregates are zero; ratio pinned to 1.0");
    }
    println!(
        "distance ratio {:.6} (malicious {:.6} / benign {:.6}) -> {}",
        report.ratio.ratio,
        report.ratio.mean_malicious,
        report.ratio.mean_benign,
        out.display()
    );
    Ok(())
}

fn cmd_sweep(config: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let out = out.unwrap_or_else(|| default_out("sweep"));
    let config = RunConfig::from_file(&config)?;
    let rows = sweep_idmap(&config, &out)?;
    for row in &rows {
        println!(
            "{:<8} nodes={:<8} edges={:<8} auc={}",
            row.strategy,
            row.node_count,
            row.edge_count,
            row.auc
                .map(|a| format!("{a:.4}"))
                .unwrap_or_else(|| "n/a".into())
        );
    }
    println!("wrote {}", out.join("sweep.csv").display());
    Ok(())
}

fn cmd_run(config: PathBuf, jobs: Option<usize>, out: Option<PathBuf>) -> Result<()> {
    let out = out.unwrap_or_else(|| default_out("run"));
    let mut config = RunConfig::from_file(&config)?;
    if jobs.is_some() {
        config.jobs = jobs;
    }
    set_jobs(config.jobs)?;
    let summary = run_pipeline(&config, &out)?;
    let r = &summary.report;
    println!(
        "run complete: {} day(s), threshold {:.6}, overall tpr={:?} fpr={:?} auc={:?}",
        r.days.len(),
        r.threshold,
        r.overall.tpr,
        r.overall.fpr,
        r.overall.auc
    );
    if let Some(reduced) = &summary.reduced {
        for day in &reduced.days {
            println!(
                "day {}: fpr {:?} -> {:?} ({} communities over {} alerts)",
                day.day,
                day.process_eval_before.fpr,
                day.process_eval_after.fpr,
                day.community_count,
                day.alerted_processes
            );
        }
    }
    println!("artifacts under {}", summary.out_dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTraces { scenario, out } => cmd_gen_traces(scenario, out),
        Command::BuildGraph { trace, idmap, out } => cmd_build_graph(trace, idmap, out),
        Command::Detect {
            train,
            test,
            idmap,
            k,
            cap,
            threshold,
            jobs,
            export_graphs,
            out,
        } => {
            set_jobs(jobs)?;
            cmd_detect(train, test, idmap, k, cap, threshold, export_graphs, out)
        }
        Command::ReduceFp {
            alerts,
            trace,
            threshold,
            knn,
            out,
        } => cmd_reduce_fp(alerts, trace, threshold, knn, out),
        Command::Evaluate { verdicts, out } => cmd_evaluate(verdicts, out),
        Command::AnalyzeDistance {
            train,
            test,
            idmap,
            k,
            cap,
            aggregate,
            unknown_stats,
            pairs,
            drop_outlier,
            exact_p,
            out,
        } => cmd_analyze_distance(
            train,
            test,
            idmap,
            k,
            cap,
            aggregate,
            unknown_stats,
            pairs,
            drop_outlier,
            exact_p,
            out,
        ),
        Command::SweepIdmap { config, out } => cmd_sweep(config, out),
        Command::Run { config, jobs, out } => cmd_run(config, jobs, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
