//! Challenge submission files and their reconciliation with ground truth.
//!
//! Per (machine, section) a submission directory holds
//! `anomaly_score_<machine>_section_<NN>_test.csv` with `<filename>,<score>`
//! rows (9 significant digits) and
//! `decision_result_<machine>_section_<NN>_test.csv` with `<filename>,<0|1>`
//! rows, one row per test clip.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::calibration::Decision;
use crate::error::{Error, Result};
use crate::metrics::ScoredClip;
use crate::synth::GroundTruthRow;

pub fn score_filename(machine: &str, section: u8) -> String {
    format!("anomaly_score_{machine}_section_{section:02}_test.csv")
}

pub fn decision_filename(machine: &str, section: u8) -> String {
    format!("decision_result_{machine}_section_{section:02}_test.csv")
}

/// One submitted row before ground truth is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmissionRow {
    pub filename: String,
    pub score: f64,
    pub decision: Decision,
}

/// Writes the score and decision files for one (machine, section).
pub fn write_cell(
    dir: impl AsRef<Path>,
    machine: &str,
    section: u8,
    rows: &[SubmissionRow],
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut scores = String::new();
    let mut decisions = String::new();
    for row in rows {
        scores.push_str(&format!("{},{:.8e}\n", row.filename, row.score));
        decisions.push_str(&format!("{},{}\n", row.filename, row.decision.as_bit()));
    }
    let score_path = dir.join(score_filename(machine, section));
    let mut f = fs::File::create(&score_path).map_err(|e| Error::io(&score_path, e))?;
    f.write_all(scores.as_bytes()).map_err(|e| Error::io(&score_path, e))?;

    let decision_path = dir.join(decision_filename(machine, section));
    let mut f = fs::File::create(&decision_path).map_err(|e| Error::io(&decision_path, e))?;
    f.write_all(decisions.as_bytes()).map_err(|e| Error::io(&decision_path, e))?;
    Ok(())
}

fn two_fields(path: &Path, line_no: usize, line: &str) -> Result<(String, String)> {
    let mut it = line.splitn(2, ',');
    let a = it.next().unwrap_or_default();
    let b = it.next().ok_or_else(|| Error::CsvParse {
        path: path.to_path_buf(),
        line: line_no,
        detail: "expected <filename>,<value>".into(),
    })?;
    Ok((a.to_string(), b.to_string()))
}

/// Reads a score file into filename -> score.
pub fn read_scores(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (name, value) = two_fields(path, i + 1, line)?;
        let score: f64 = value.trim().parse().map_err(|_| Error::CsvParse {
            path: path.to_path_buf(),
            line: i + 1,
            detail: format!("non-numeric score {value:?}"),
        })?;
        if out.insert(name.clone(), score).is_some() {
            return Err(Error::Reconciliation(format!(
                "{}: duplicate row for {name}",
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Reads a decision file into filename -> decision; values must be 0 or 1.
pub fn read_decisions(path: impl AsRef<Path>) -> Result<BTreeMap<String, Decision>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (name, value) = two_fields(path, i + 1, line)?;
        let decision = match value.trim() {
            "0" => Decision::Normal,
            "1" => Decision::Anomaly,
            other => {
                return Err(Error::CsvParse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    detail: format!("decision must be 0 or 1, got {other:?}"),
                })
            }
        };
        if out.insert(name.clone(), decision).is_some() {
            return Err(Error::Reconciliation(format!(
                "{}: duplicate row for {name}",
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Joins a submission directory with ground truth into scored clips.
///
/// Every ground-truth clip must have exactly one score row and one
/// decision row; missing or extra filenames are a reconciliation error
/// listing the offenders.
pub fn join_with_truth(
    submission_dir: impl AsRef<Path>,
    truth: &[GroundTruthRow],
) -> Result<Vec<ScoredClip>> {
    let dir = submission_dir.as_ref();
    if truth.is_empty() {
        return Err(Error::Data("ground truth is empty".into()));
    }
    let mut by_cell: BTreeMap<(String, u8), Vec<&GroundTruthRow>> = BTreeMap::new();
    for row in truth {
        by_cell
            .entry((row.machine.clone(), row.section))
            .or_default()
            .push(row);
    }

    let mut clips = Vec::with_capacity(truth.len());
    for ((machine, section), rows) in &by_cell {
        let score_path: PathBuf = dir.join(score_filename(machine, *section));
        let decision_path: PathBuf = dir.join(decision_filename(machine, *section));
        let mut scores = read_scores(&score_path)?;
        let mut decisions = read_decisions(&decision_path)?;

        let mut missing = Vec::new();
        for row in rows {
            let score = scores.remove(&row.filename);
            let decision = decisions.remove(&row.filename);
            match (score, decision) {
                (Some(score), Some(decision)) => clips.push(ScoredClip {
                    filename: row.filename.clone(),
                    machine: machine.clone(),
                    section: *section,
                    domain: row.domain,
                    condition: row.condition,
                    score,
                    decision,
                }),
                _ => missing.push(row.filename.clone()),
            }
        }
        let extra: Vec<String> = scores.keys().chain(decisions.keys()).cloned().collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::Reconciliation(format!(
                "machine {machine} section {section}: missing rows [{}], extra rows [{}]",
                missing.join(", "),
                extra.join(", ")
            )));
        }
    }
    Ok(clips)
}
