//! End-to-end pipeline: train detectors, calibrate thresholds, score the
//! test split, emit submission files, and evaluate submissions against
//! ground truth.
//!
//! The detection run never opens the ground-truth sidecar; it sees only
//! the WAV tree. Per-cell training seeds derive from the master seed, so
//! a full run is byte-reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{self, decide, Threshold};
use crate::dataset::{build_index, load_wav, DatasetIndex, Split, CHALLENGE_SAMPLE_RATE_HZ};
use crate::detectors::{
    self, AeConfig, ClassifierConfig, Scorer, ScoreRule, DEFAULT_AE_HIDDEN,
    DEFAULT_CLASSIFIER_HIDDEN, DEFAULT_LOGIT_CLAMP,
};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::metrics::{self, EvalReport, LeaderboardEntry, MetricsConfig};
use crate::nnet::{Loss, TrainConfig};
use crate::rng;
use crate::submission::{self, SubmissionRow};
use crate::synth::{read_ground_truth, GROUND_TRUTH_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Ae,
    Classifier,
}

/// Full configuration for a detection run. All fields have working
/// defaults; the CLI overlays config-file values and flags on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset_root: PathBuf,
    pub work_dir: PathBuf,
    pub detector: DetectorKind,
    pub seed: u64,
    pub percentile: f64,
    pub sample_rate_hz: u32,
    pub feature: FeatureConfig,
    pub train: TrainConfig,
    pub metrics: MetricsConfig,
    pub ae_hidden: Vec<usize>,
    pub classifier_hidden: Vec<usize>,
    pub score_rule: ScoreRule,
    pub logit_clamp: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset_root: PathBuf::from("data"),
            work_dir: PathBuf::from("work"),
            detector: DetectorKind::Ae,
            seed: 0,
            percentile: 0.9,
            sample_rate_hz: CHALLENGE_SAMPLE_RATE_HZ,
            feature: FeatureConfig::default(),
            train: TrainConfig::default(),
            metrics: MetricsConfig::default(),
            ae_hidden: DEFAULT_AE_HIDDEN.to_vec(),
            classifier_hidden: DEFAULT_CLASSIFIER_HIDDEN.to_vec(),
            score_rule: ScoreRule::Logit,
            logit_clamp: DEFAULT_LOGIT_CLAMP,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.feature.validate()?;
        self.train.validate()?;
        self.metrics.validate()?;
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return Err(Error::Config(format!(
                "percentile {} outside (0, 1)",
                self.percentile
            )));
        }
        Ok(())
    }

    pub fn submission_dir(&self) -> PathBuf {
        self.work_dir.join("submission")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.work_dir.join("models")
    }

    pub fn thresholds_path(&self) -> PathBuf {
        self.work_dir.join("thresholds.csv")
    }
}

/// Outcome of a detection run.
#[derive(Debug)]
pub struct RunSummary {
    pub submission_dir: PathBuf,
    pub thresholds: Vec<Threshold>,
    pub loss_history: BTreeMap<String, Vec<f64>>,
    pub scored_test_clips: usize,
}

fn cell_train_config(base: &TrainConfig, master_seed: u64, label: &str, loss: Loss) -> TrainConfig {
    TrainConfig {
        seed: rng::derive_seed(master_seed, label),
        loss,
        ..base.clone()
    }
}

/// Trains, calibrates, scores the test split, and writes submission files
/// plus the threshold table under the work directory.
pub fn run_detection(config: &PipelineConfig) -> Result<RunSummary> {
    config.validate()?;
    let index = build_index(&config.dataset_root)?;
    if index.is_empty() {
        return Err(Error::Data(format!(
            "dataset root {} holds no clips",
            config.dataset_root.display()
        )));
    }
    let cells = index.cells();
    if !cells
        .iter()
        .any(|(m, s)| !index.select(m, *s, Some(Split::Test), None).is_empty())
    {
        return Err(Error::Data("dataset has no test split to score".into()));
    }

    std::fs::create_dir_all(config.models_dir())
        .map_err(|e| Error::io(config.models_dir(), e))?;

    let mut thresholds = Vec::new();
    let mut loss_history = BTreeMap::new();
    let mut scored = 0usize;

    // One classifier per machine, shared across its sections.
    let mut classifiers: BTreeMap<String, detectors::SectionClassifier> = BTreeMap::new();
    if config.detector == DetectorKind::Classifier {
        for machine in index.machines.iter() {
            let clf_config = ClassifierConfig {
                feature: config.feature.clone(),
                hidden_dims: config.classifier_hidden.clone(),
                train: cell_train_config(
                    &config.train,
                    config.seed,
                    &format!("run/classifier/{machine}"),
                    Loss::CrossEntropy,
                ),
                logit_clamp: config.logit_clamp,
                score_rule: config.score_rule,
            };
            let (clf, history) = detectors::train_classifier(&index, machine, &clf_config)?;
            detectors::save_classifier(&clf, config.models_dir().join(format!("classifier_{machine}")))?;
            loss_history.insert(format!("classifier/{machine}"), history);
            classifiers.insert(machine.clone(), clf);
        }
    }

    for (machine, section) in &cells {
        let scorer: Box<dyn Scorer> = match config.detector {
            DetectorKind::Ae => {
                let ae_config = AeConfig {
                    feature: config.feature.clone(),
                    hidden_dims: config.ae_hidden.clone(),
                    train: cell_train_config(
                        &config.train,
                        config.seed,
                        &format!("run/ae/{machine}/{section}"),
                        Loss::Mse,
                    ),
                };
                let (ae, history) = detectors::train_ae(&index, machine, *section, &ae_config)?;
                detectors::save_ae(
                    &ae,
                    config.models_dir().join(format!("ae_{machine}_section_{section:02}")),
                )?;
                loss_history.insert(format!("ae/{machine}/{section:02}"), history);
                Box::new(ae)
            }
            DetectorKind::Classifier => Box::new(
                classifiers
                    .get(machine)
                    .expect("classifier trained for every machine")
                    .clone(),
            ),
        };

        let threshold =
            calibration::calibrate(scorer.as_ref(), &index, machine, *section, config.percentile)?;

        let test_clips = index.select(machine, *section, Some(Split::Test), None);
        if test_clips.is_empty() {
            return Err(Error::Data(format!(
                "machine {machine} section {section} has no test clips"
            )));
        }
        let mut rows = Vec::with_capacity(test_clips.len());
        for (path, meta) in test_clips {
            let clip = load_wav(path)?;
            if clip.sample_rate_hz != config.sample_rate_hz {
                return Err(Error::Data(format!(
                    "{}: sample rate {} Hz, expected {}",
                    path.display(),
                    clip.sample_rate_hz,
                    config.sample_rate_hz
                )));
            }
            let score = scorer.score(&clip, meta)?;
            rows.push(SubmissionRow {
                filename: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                score,
                decision: decide(score, &threshold),
            });
        }
        scored += rows.len();
        submission::write_cell(config.submission_dir(), machine, *section, &rows)?;
        thresholds.push(threshold);
    }

    calibration::write_thresholds(&thresholds, config.thresholds_path())?;
    Ok(RunSummary {
        submission_dir: config.submission_dir(),
        thresholds,
        loss_history,
        scored_test_clips: scored,
    })
}

/// Evaluates one submission directory against a ground-truth file.
pub fn evaluate_submission(
    submission_dir: impl AsRef<Path>,
    ground_truth: impl AsRef<Path>,
    config: &MetricsConfig,
) -> Result<EvalReport> {
    let truth = read_ground_truth(ground_truth)?;
    let clips = submission::join_with_truth(submission_dir, &truth)?;
    metrics::evaluate_clips(&clips, config)
}

/// Ranks several submission directories; teams whose evaluation fails are
/// reported separately and excluded from the board.
pub fn rank_submission_dirs(
    submissions: &[(String, PathBuf)],
    ground_truth: impl AsRef<Path>,
    config: &MetricsConfig,
) -> Result<(Vec<LeaderboardEntry>, Vec<(String, Error)>)> {
    if submissions.is_empty() {
        return Err(Error::Input("no submission directories given".into()));
    }
    let truth_path = ground_truth.as_ref();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (team, dir) in submissions {
        match evaluate_submission(dir, truth_path, config) {
            Ok(report) => reports.push((team.clone(), report)),
            Err(err) => failures.push((team.clone(), err)),
        }
    }
    Ok((metrics::rank_submissions(&reports), failures))
}

/// Renders a leaderboard as `rank,team,omega` CSV.
pub fn leaderboard_to_csv(rows: &[LeaderboardEntry]) -> String {
    let mut out = String::from("rank,team,omega\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.6}\n", r.rank, r.team, r.omega));
    }
    out
}

/// Convenience: the ground-truth path inside a generated dataset root.
pub fn ground_truth_path(dataset_root: impl AsRef<Path>) -> PathBuf {
    dataset_root.as_ref().join(GROUND_TRUTH_FILE)
}

impl DatasetIndex {
    /// Test-split clip count (used for submission sanity checks).
    pub fn test_clip_count(&self) -> usize {
        self.clips.iter().filter(|(_, m)| m.split == Split::Test).count()
    }
}
