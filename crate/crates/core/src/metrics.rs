//! Evaluation surface: confusion counts, ROC/AUC, Pearson correlation with
//! p-values, node-vs-entity deduplication, and multi-day FPR series.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::detector::{apply_threshold, DetectorError, DetectorModel, Verdict};
use crate::event::Label;
use crate::graph::{NodeUuid, ProvGraph};
use crate::special;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    EmptyVerdicts,
    /// AUC needs at least one positive and one negative.
    SingleClass,
    TooFewPoints {
        n: usize,
    },
    ZeroVariance,
    LengthMismatch {
        left: usize,
        right: usize,
    },
    UncoveredUuid(NodeUuid),
    /// A day had no benign (or no labeled) population for the rate.
    UndefinedRate {
        day: usize,
    },
    PermutationTooLarge {
        n: usize,
    },
    Detector(DetectorError),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::EmptyVerdicts => write!(f, "empty verdict set"),
            MetricsError::SingleClass => {
                write!(f, "need at least one positive and one negative score")
            }
            MetricsError::TooFewPoints { n } => {
                write!(f, "need at least 3 points, got {n}")
            }
            MetricsError::ZeroVariance => write!(f, "zero variance in input"),
            MetricsError::LengthMismatch { left, right } => {
                write!(f, "input length mismatch: {left} vs {right}")
            }
            MetricsError::UncoveredUuid(u) => {
                write!(f, "verdict uuid {u} missing from entity map")
            }
            MetricsError::UndefinedRate { day } => {
                write!(f, "rate undefined for day {day}: empty denominator")
            }
            MetricsError::PermutationTooLarge { n } => {
                write!(f, "exact permutation test limited to n <= 10, got {n}")
            }
            MetricsError::Detector(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MetricsError {}

impl From<DetectorError> for MetricsError {
    fn from(e: DetectorError) -> Self {
        MetricsError::Detector(e)
    }
}

/// Standard confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn tpr(&self) -> Option<f64> {
        let denom = self.tp + self.fn_;
        (denom > 0).then(|| self.tp as f64 / denom as f64)
    }

    pub fn fpr(&self) -> Option<f64> {
        let denom = self.fp + self.tn;
        (denom > 0).then(|| self.fp as f64 / denom as f64)
    }
}

pub fn confusion(verdicts: &[Verdict]) -> Result<Confusion, MetricsError> {
    if verdicts.is_empty() {
        return Err(MetricsError::EmptyVerdicts);
    }
    let mut c = Confusion {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for v in verdicts {
        match (v.predicted.is_malicious(), v.truth.is_malicious()) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// AUC as the Mann-Whitney statistic P(score_pos > score_neg) + P(tie)/2,
/// computed with a single midrank sweep over the sorted scores.
pub fn auc(scores: &[(f64, Label)]) -> Result<f64, MetricsError> {
    let n_pos = scores.iter().filter(|(_, l)| l.is_malicious()).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut sorted: Vec<(f64, Label)> = scores.to_vec();
    sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        // 1-based midrank of the tie block [i, j).
        let midrank = (i + j + 1) as f64 / 2.0;
        let pos_in_block = sorted[i..j]
            .iter()
            .filter(|(_, l)| l.is_malicious())
            .count();
        rank_sum_pos += midrank * pos_in_block as f64;
        i = j;
    }
    let n_pos = n_pos as f64;
    let n_neg = n_neg as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// ROC points (fpr, tpr) swept from the highest threshold down, beginning
/// at (0,0) and ending at (1,1). Ties share one point.
pub fn roc_curve(scores: &[(f64, Label)]) -> Vec<(f64, f64)> {
    let n_pos = scores.iter().filter(|(_, l)| l.is_malicious()).count() as f64;
    let n_neg = scores.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Vec::new();
    }
    let mut sorted: Vec<(f64, Label)> = scores.to_vec();
    sorted.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = alloc::vec![(0.0, 0.0)];
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1.is_malicious() {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            j += 1;
        }
        points.push((fp / n_neg, tp / n_pos));
        i = j;
    }
    points
}

/// Sample Pearson correlation with a two-sided p-value from the
/// t-distribution with n-2 degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PearsonResult {
    pub r: f64,
    pub p_value: f64,
}

fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(MetricsError::TooFewPoints { n: xs.len() });
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    // Clamp against rounding drift just outside [-1, 1].
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<PearsonResult, MetricsError> {
    let r = pearson_r(xs, ys)?;
    let df = (xs.len() - 2) as f64;
    let denom = 1.0 - r * r;
    let p_value = if denom <= 0.0 {
        0.0
    } else {
        let t = r * libm::sqrt(df / denom);
        special::student_t_two_sided(t, df)
    };
    Ok(PearsonResult { r, p_value })
}

/// Exact permutation p-value for small samples (n <= 10): the fraction of
/// permutations of `ys` whose |r| is at least the observed |r|.
pub fn pearson_permutation(xs: &[f64], ys: &[f64]) -> Result<PearsonResult, MetricsError> {
    let r_obs = pearson_r(xs, ys)?;
    let n = xs.len();
    if n > 10 {
        return Err(MetricsError::PermutationTooLarge { n });
    }
    let mut perm: Vec<f64> = ys.to_vec();
    let mut counts = [0u64; 2]; // [at_least_as_extreme, total]
    let threshold = libm::fabs(r_obs) - 1e-12;
    // Heap's algorithm, iterative.
    let mut c = alloc::vec![0usize; n];
    let mut tally = |perm: &[f64]| {
        if let Ok(r) = pearson_r(xs, perm) {
            if libm::fabs(r) >= threshold {
                counts[0] += 1;
            }
        }
        counts[1] += 1;
    };
    tally(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            tally(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(PearsonResult {
        r: r_obs,
        p_value: counts[0] as f64 / counts[1] as f64,
    })
}

/// Node counts versus distinct-entity counts among the alerts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityDedup {
    pub tp_entity: u64,
    pub fp_entity: u64,
    /// tp / tp_entity; `None` when there are no true-positive entities.
    pub expansion_ratio: Option<f64>,
}

pub fn entity_dedup(
    verdicts: &[Verdict],
    entity_of: &BTreeMap<NodeUuid, String>,
) -> Result<EntityDedup, MetricsError> {
    let mut tp_nodes = 0u64;
    let mut tp_entities: BTreeSet<&str> = BTreeSet::new();
    let mut fp_entities: BTreeSet<&str> = BTreeSet::new();
    for v in verdicts {
        if !v.predicted.is_malicious() {
            continue;
        }
        let entity = entity_of
            .get(&v.uuid)
            .ok_or(MetricsError::UncoveredUuid(v.uuid))?;
        if v.truth.is_malicious() {
            tp_nodes += 1;
            tp_entities.insert(entity);
        } else {
            fp_entities.insert(entity);
        }
    }
    let tp_entity = tp_entities.len() as u64;
    Ok(EntityDedup {
        tp_entity,
        fp_entity: fp_entities.len() as u64,
        expansion_ratio: (tp_entity > 0).then(|| tp_nodes as f64 / tp_entity as f64),
    })
}

/// Full per-dataset evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    /// `None` when the day has a single class (e.g. attack-free traces).
    pub auc: Option<f64>,
    pub tp_entity: u64,
    pub fp_entity: u64,
    pub expansion_ratio: Option<f64>,
    pub roc: Vec<(f64, f64)>,
}

pub fn eval_report(
    verdicts: &[Verdict],
    entity_of: &BTreeMap<NodeUuid, String>,
) -> Result<EvalReport, MetricsError> {
    let c = confusion(verdicts)?;
    let scores: Vec<(f64, Label)> = verdicts.iter().map(|v| (v.score, v.truth)).collect();
    let auc_value = match auc(&scores) {
        Ok(a) => Some(a),
        Err(MetricsError::SingleClass) => None,
        Err(e) => return Err(e),
    };
    let dedup = entity_dedup(verdicts, entity_of)?;
    Ok(EvalReport {
        tp: c.tp,
        tn: c.tn,
        fp: c.fp,
        fn_: c.fn_,
        tpr: c.tpr(),
        fpr: c.fpr(),
        auc: auc_value,
        tp_entity: dedup.tp_entity,
        fp_entity: dedup.fp_entity,
        expansion_ratio: dedup.expansion_ratio,
        roc: roc_curve(&scores),
    })
}

/// One FPR per day at a fixed threshold, scoring each day's graph against
/// the trained model.
pub fn fpr_series(
    model: &DetectorModel,
    days: &[ProvGraph],
    threshold: f64,
) -> Result<Vec<f64>, MetricsError> {
    let mut out = Vec::with_capacity(days.len());
    for (day, g) in days.iter().enumerate() {
        let scores = model.score_all(g)?;
        let verdicts = apply_threshold(&scores, g, threshold);
        let c = confusion(&verdicts)?;
        out.push(c.fpr().ok_or(MetricsError::UndefinedRate { day })?);
    }
    Ok(out)
}

/// Least-squares slope of a series against its index; positive values mean
/// an increasing trend.
pub fn trend_slope(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean_x = (nf - 1.0) / 2.0;
    let mean_y = series.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, y) in series.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}
