//! Evaluation protocol: per-domain AUC, per-section partial AUC over the
//! low-FPR range [0, p], the official harmonic-mean score, decision
//! statistics, and submission ranking.
//!
//! AUC counts strictly-greater (anomaly, normal) score pairs; ties
//! contribute zero, deliberately deviating from the Mann-Whitney 0.5
//! convention. Partial AUC pools both domains' normals, orders them by
//! descending score (ties broken by filename), and keeps the top
//! `floor(p * N)` of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calibration::Decision;
use crate::dataset::{Condition, Domain};
use crate::error::{Error, Result};

/// One test clip with its submitted score/decision and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredClip {
    pub filename: String,
    pub machine: String,
    pub section: u8,
    pub domain: Domain,
    pub condition: Condition,
    pub score: f64,
    pub decision: Decision,
}

impl ScoredClip {
    pub fn validate(&self) -> Result<()> {
        if !self.score.is_finite() {
            return Err(Error::Input(format!(
                "{}: non-finite score {}",
                self.filename, self.score
            )));
        }
        if self.condition == Condition::Unknown {
            return Err(Error::Input(format!(
                "{}: ground truth must be normal or anomaly",
                self.filename
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// Upper bound of the FPR range for partial AUC.
    pub p: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { p: 0.1 }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("pAUC range p {} outside (0, 1)", self.p)));
        }
        Ok(())
    }
}

/// Confusion counts for one (machine, section); anomaly is the positive
/// class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn precision(&self) -> f64 {
        ratio_or_zero(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio_or_zero(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Full evaluation output for one submission.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub p: f64,
    pub auc: BTreeMap<(String, u8, Domain), f64>,
    pub pauc: BTreeMap<(String, u8), f64>,
    pub official_score: f64,
    pub decision_stats: BTreeMap<(String, u8), ConfusionCounts>,
}

fn split_scores(clips: &[&ScoredClip]) -> (Vec<(f64, String)>, Vec<f64>) {
    let mut normals = Vec::new();
    let mut anomalies = Vec::new();
    for c in clips {
        match c.condition {
            Condition::Normal => normals.push((c.score, c.filename.clone())),
            Condition::Anomaly => anomalies.push(c.score),
            Condition::Unknown => {}
        }
    }
    (normals, anomalies)
}

/// Counts (anomaly, normal) pairs with anomaly score strictly greater,
/// via sort + binary search. Test code re-derives this by brute force.
fn count_strictly_above(normals_sorted: &[f64], anomalies: &[f64]) -> u64 {
    let mut count = 0u64;
    for &a in anomalies {
        count += normals_sorted.partition_point(|&n| n < a) as u64;
    }
    count
}

/// AUC for one (machine, section) with normals restricted to `domain`;
/// anomalies come from the whole section.
pub fn auc_domain(clips: &[&ScoredClip], domain: Domain) -> Result<f64> {
    for c in clips {
        c.validate()?;
    }
    let anomalies: Vec<f64> = clips
        .iter()
        .filter(|c| c.condition == Condition::Anomaly)
        .map(|c| c.score)
        .collect();
    let mut domain_normals: Vec<f64> = clips
        .iter()
        .filter(|c| c.condition == Condition::Normal && c.domain == domain)
        .map(|c| c.score)
        .collect();
    if domain_normals.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "no normal clips in domain {domain}"
        )));
    }
    if anomalies.is_empty() {
        return Err(Error::UndefinedMetric("no anomalous clips in section".into()));
    }
    domain_normals.sort_by(f64::total_cmp);
    let hits = count_strictly_above(&domain_normals, &anomalies);
    Ok(hits as f64 / (domain_normals.len() as f64 * anomalies.len() as f64))
}

/// Section-level AUC over pooled normals from both domains.
pub fn auc_pooled(clips: &[&ScoredClip]) -> Result<f64> {
    for c in clips {
        c.validate()?;
    }
    let (normals, anomalies) = split_scores(clips);
    if normals.is_empty() {
        return Err(Error::UndefinedMetric("no normal clips in section".into()));
    }
    if anomalies.is_empty() {
        return Err(Error::UndefinedMetric("no anomalous clips in section".into()));
    }
    let mut scores: Vec<f64> = normals.iter().map(|(s, _)| *s).collect();
    scores.sort_by(f64::total_cmp);
    let hits = count_strictly_above(&scores, &anomalies);
    Ok(hits as f64 / (scores.len() as f64 * anomalies.len() as f64))
}

/// Partial AUC for one (machine, section): both domains' normals pooled,
/// only the top `floor(p * N)` normals by descending score enter the sum.
pub fn pauc_section(clips: &[&ScoredClip], config: &MetricsConfig) -> Result<f64> {
    config.validate()?;
    for c in clips {
        c.validate()?;
    }
    let (mut normals, anomalies) = split_scores(clips);
    if anomalies.is_empty() {
        return Err(Error::UndefinedMetric("no anomalous clips in section".into()));
    }
    let top = (config.p * normals.len() as f64).floor() as usize;
    if top == 0 {
        let needed = (1.0 / config.p).ceil() as usize;
        return Err(Error::UndefinedMetric(format!(
            "floor(p * {}) = 0; need at least {needed} normal clips for p = {}",
            normals.len(),
            config.p
        )));
    }
    // Descending score; ties broken by ascending filename for determinism.
    normals.sort_by(|(sa, fa), (sb, fb)| sb.total_cmp(sa).then_with(|| fa.cmp(fb)));
    let mut kept: Vec<f64> = normals[..top].iter().map(|(s, _)| *s).collect();
    kept.sort_by(f64::total_cmp);
    let hits = count_strictly_above(&kept, &anomalies);
    Ok(hits as f64 / (top as f64 * anomalies.len() as f64))
}

/// Harmonic mean with the zero-limit convention: any zero input makes the
/// mean zero.
pub fn harmonic_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if values.iter().any(|&v| v == 0.0) {
        return 0.0;
    }
    values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

/// Official score: harmonic mean over every per-domain AUC and every
/// per-section pAUC for the expected (machine, section) cells.
pub fn official_score(
    auc: &BTreeMap<(String, u8, Domain), f64>,
    pauc: &BTreeMap<(String, u8), f64>,
    cells: &[(String, u8)],
) -> Result<f64> {
    let mut missing = Vec::new();
    let mut values = Vec::with_capacity(cells.len() * 3);
    for (machine, section) in cells {
        for domain in Domain::ALL {
            match auc.get(&(machine.clone(), *section, domain)) {
                Some(v) => values.push(*v),
                None => missing.push(format!("auc[{machine},{section},{domain}]")),
            }
        }
        match pauc.get(&(machine.clone(), *section)) {
            Some(v) => values.push(*v),
            None => missing.push(format!("pauc[{machine},{section}]")),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingMetrics(missing));
    }
    Ok(harmonic_mean(&values))
}

/// Exact confusion counts per (machine, section).
pub fn decision_stats(clips: &[ScoredClip]) -> BTreeMap<(String, u8), ConfusionCounts> {
    let mut stats: BTreeMap<(String, u8), ConfusionCounts> = BTreeMap::new();
    for c in clips {
        let cell = stats.entry((c.machine.clone(), c.section)).or_default();
        match (c.condition, c.decision) {
            (Condition::Anomaly, Decision::Anomaly) => cell.tp += 1,
            (Condition::Normal, Decision::Anomaly) => cell.fp += 1,
            (Condition::Normal, Decision::Normal) => cell.tn += 1,
            (Condition::Anomaly, Decision::Normal) => cell.fn_ += 1,
            (Condition::Unknown, _) => {}
        }
    }
    stats
}

/// Evaluates a full set of scored clips into a report.
pub fn evaluate_clips(clips: &[ScoredClip], config: &MetricsConfig) -> Result<EvalReport> {
    config.validate()?;
    if clips.is_empty() {
        return Err(Error::Data("no scored clips to evaluate".into()));
    }
    let mut by_cell: BTreeMap<(String, u8), Vec<&ScoredClip>> = BTreeMap::new();
    for c in clips {
        c.validate()?;
        by_cell.entry((c.machine.clone(), c.section)).or_default().push(c);
    }

    let mut auc = BTreeMap::new();
    let mut pauc = BTreeMap::new();
    for ((machine, section), cell_clips) in &by_cell {
        for domain in Domain::ALL {
            let v = auc_domain(cell_clips, domain).map_err(|e| match e {
                Error::UndefinedMetric(msg) => Error::UndefinedMetric(format!(
                    "machine {machine} section {section}: {msg}"
                )),
                other => other,
            })?;
            auc.insert((machine.clone(), *section, domain), v);
        }
        let v = pauc_section(cell_clips, config).map_err(|e| match e {
            Error::UndefinedMetric(msg) => {
                Error::UndefinedMetric(format!("machine {machine} section {section}: {msg}"))
            }
            other => other,
        })?;
        pauc.insert((machine.clone(), *section), v);
    }

    let cells: Vec<(String, u8)> = by_cell.keys().cloned().collect();
    let omega = official_score(&auc, &pauc, &cells)?;
    Ok(EvalReport {
        p: config.p,
        auc,
        pauc,
        official_score: omega,
        decision_stats: decision_stats(clips),
    })
}

/// One leaderboard row.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub team: String,
    pub omega: f64,
}

/// Ranks submissions descending by official score; ties break by team id
/// ascending.
pub fn rank_submissions(reports: &[(String, EvalReport)]) -> Vec<LeaderboardEntry> {
    let mut rows: Vec<(String, f64)> = reports
        .iter()
        .map(|(team, r)| (team.clone(), r.official_score))
        .collect();
    rows.sort_by(|(ta, oa), (tb, ob)| ob.total_cmp(oa).then_with(|| ta.cmp(tb)));
    rows.into_iter()
        .enumerate()
        .map(|(i, (team, omega))| LeaderboardEntry {
            rank: i + 1,
            team,
            omega,
        })
        .collect()
}
