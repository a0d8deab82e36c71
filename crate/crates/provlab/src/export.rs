//! CSV and JSON export/import of graphs, verdicts, features, and reports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use provlab_core::detector::Verdict;
use provlab_core::event::Label;
use provlab_core::features::{NeighborhoodExtractor, TupleUniverse};
use provlab_core::fp_reduction::FlagReport;
use provlab_core::graph::{NodeUuid, ProvGraph};
use provlab_core::metrics::EvalReport;

/// nodes.csv: uuid,kind,entity,label
pub fn write_nodes_csv(path: &Path, g: &ProvGraph) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("create {}", path.display()))?;
    w.write_record(["uuid", "kind", "entity", "label"])?;
    for n in g.nodes() {
        w.write_record([
            format!("{}", n.uuid),
            n.kind.as_str().to_string(),
            n.entity.clone(),
            n.label.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// edges.csv: src,dst,action,ts,label
pub fn write_edges_csv(path: &Path, g: &ProvGraph) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("create {}", path.display()))?;
    w.write_record(["src", "dst", "action", "ts", "label"])?;
    for e in g.edges() {
        w.write_record([
            format!("{}", g.node(e.src).uuid),
            format!("{}", g.node(e.dst).uuid),
            e.action.as_str().to_string(),
            e.timestamp.to_string(),
            e.label.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One day's verdicts with their uuid -> entity mapping.
pub type DayVerdicts<'a> = (u32, &'a [Verdict], &'a BTreeMap<NodeUuid, String>);

/// verdicts.csv: day,uuid,entity,score,predicted,truth
pub fn write_verdicts_csv(path: &Path, days: &[DayVerdicts<'_>]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("create {}", path.display()))?;
    w.write_record(["day", "uuid", "entity", "score", "predicted", "truth"])?;
    for (day, verdicts, entity_of) in days {
        for v in *verdicts {
            let entity = entity_of
                .get(&v.uuid)
                .map(String::as_str)
                .unwrap_or_default();
            w.write_record([
                day.to_string(),
                format!("{}", v.uuid),
                entity.to_string(),
                v.score.to_string(),
                v.predicted.as_str().to_string(),
                v.truth.as_str().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One parsed verdicts.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub day: u32,
    pub verdict: Verdict,
    pub entity: String,
}

fn parse_label(s: &str) -> Result<Label> {
    match s {
        "benign" => Ok(Label::Benign),
        "malicious" => Ok(Label::Malicious),
        other => bail!("unknown label `{other}`"),
    }
}

pub fn read_verdicts_csv(path: &Path) -> Result<Vec<VerdictRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("open {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let field = |j: usize| -> Result<&str> {
            record
                .get(j)
                .with_context(|| format!("verdicts row {}: missing column {j}", i + 1))
        };
        let uuid = NodeUuid::parse_hex(field(1)?)
            .with_context(|| format!("verdicts row {}: bad uuid", i + 1))?;
        rows.push(VerdictRow {
            day: field(0)?.parse()?,
            verdict: Verdict {
                uuid,
                score: field(3)?.parse()?,
                predicted: parse_label(field(4)?)?,
                truth: parse_label(field(5)?)?,
            },
            entity: field(2)?.to_string(),
        });
    }
    Ok(rows)
}

/// features.csv: uuid,label then one column per tuple in universe order.
pub fn write_features_csv(
    path: &Path,
    g: &ProvGraph,
    universe: &TupleUniverse,
    k: usize,
    cap: usize,
) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("create {}", path.display()))?;
    let mut header = vec!["uuid".to_string(), "label".to_string()];
    header.extend(universe.tuples().iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    let mut extractor = NeighborhoodExtractor::new(g, k, cap);
    for n in g.nodes() {
        let v = extractor
            .vector_for(n.uuid, universe)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut row = vec![format!("{}", n.uuid), n.label.as_str().to_string()];
        row.extend(v.counts.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// fp_communities.csv: day,process_key,community_id,community_size,flagged,representative
pub fn write_communities_csv(
    path: &Path,
    days: &[(u32, &FlagReport, &[provlab_core::fp_reduction::Community])],
) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("create {}", path.display()))?;
    w.write_record([
        "day",
        "process_key",
        "community_id",
        "community_size",
        "flagged",
        "representative",
    ])?;
    for (day, report, communities) in days {
        for c in *communities {
            let (_, representative, size, flagged) = &report.representatives[c.id];
            for member in &c.members {
                w.write_record([
                    day.to_string(),
                    member.clone(),
                    c.id.to_string(),
                    size.to_string(),
                    flagged.to_string(),
                    representative.clone(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Summary row in the evaluation-table layout:
/// Method,TPR,FPR,AUC,TP,TN,FN,FP.
pub fn write_summary_csv(path: &Path, rows: &[(String, &EvalReport)]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("create {}", path.display()))?;
    w.write_record(["Method", "TPR", "FPR", "AUC", "TP", "TN", "FN", "FP"])?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for (method, r) in rows {
        w.write_record([
            method.clone(),
            fmt(r.tpr),
            fmt(r.fpr),
            fmt(r.auc),
            r.tp.to_string(),
            r.tn.to_string(),
            r.fn_.to_string(),
            r.fp.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline, written atomically enough for our
/// purposes (single write call).
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    let mut f = File::create(path).with_context(|| format!("create {}", path.display()))?;
    f.write_all(out.as_bytes())?;
    Ok(())
}
