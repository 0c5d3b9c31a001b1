//! The two baseline anomaly-score calculators: autoencoder
//! reconstruction error and section-classifier negative logit.
//!
//! One autoencoder is trained per (machine, section); one section
//! classifier per machine. Both consume stacked log-mel rows and train on
//! the pooled source+target training normals.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_wav, AudioClip, ClipMetadata, DatasetIndex, Domain, Split};
use crate::error::{Error, Result};
use crate::features::{log_mel, stack, FeatureConfig};
use crate::mat::Mat;
use crate::nnet::{self, Activation, Loss, Mlp, Targets, TrainConfig};
use crate::rng;

/// Anything that maps a clip to an anomaly score (higher = more
/// anomalous).
pub trait Scorer {
    fn score(&self, clip: &AudioClip, meta: &ClipMetadata) -> Result<f64>;
}

/// Default autoencoder bottleneck layout (hidden layers only).
pub const DEFAULT_AE_HIDDEN: [usize; 7] = [128, 128, 128, 8, 128, 128, 128];

/// Default classifier hidden layout.
pub const DEFAULT_CLASSIFIER_HIDDEN: [usize; 2] = [128, 64];

/// Default clamp for classifier probabilities before the logit.
pub const DEFAULT_LOGIT_CLAMP: f64 = 1e-7;

/// How the classifier's correct-section probability becomes a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    /// Negative log-odds: `log((1 - p) / p)`.
    Logit,
    /// Negative log-probability: `-log(p)`.
    NegLogProb,
}

/// Per-dimension input standardization fitted on the training rows.
/// Raw log-mel values live around [-100, 15] dB; without standardization
/// the relu stacks train erratically and single cells can fail to learn
/// the sparse target mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Identity transform of the given width.
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Column means and deviations over the rows. Deviations are floored
    /// at 1e-6 so constant columns stay harmless.
    pub fn fit(rows: &Mat) -> Self {
        let (n, dim) = (rows.rows(), rows.cols());
        let mut mean = vec![0.0; dim];
        for t in 0..n {
            for (m, &v) in mean.iter_mut().zip(rows.row(t)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; dim];
        for t in 0..n {
            for ((s, &v), &m) in var.iter_mut().zip(rows.row(t)).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .iter()
            .map(|v| (v / n as f64).sqrt().max(1e-6))
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, rows: &mut Mat) {
        let dim = self.mean.len();
        assert_eq!(rows.cols(), dim, "standardizer width mismatch");
        for t in 0..rows.rows() {
            for ((v, &m), &s) in rows.row_mut(t).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
    }
}

/// Reconstruction-error detector for one (machine, section).
#[derive(Debug, Clone, PartialEq)]
pub struct AeDetector {
    pub net: Mlp,
    pub feature_config: FeatureConfig,
    pub standardizer: Standardizer,
}

/// Per-machine section classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionClassifier {
    pub net: Mlp,
    pub section_labels: Vec<u8>,
    pub feature_config: FeatureConfig,
    pub standardizer: Standardizer,
    pub logit_clamp: f64,
    pub score_rule: ScoreRule,
}

/// Training settings for [`train_ae`].
#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub feature: FeatureConfig,
    pub hidden_dims: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig {
            feature: FeatureConfig::default(),
            hidden_dims: DEFAULT_AE_HIDDEN.to_vec(),
            train: TrainConfig::default(),
        }
    }
}

/// Training settings for [`train_classifier`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub feature: FeatureConfig,
    pub hidden_dims: Vec<usize>,
    pub train: TrainConfig,
    pub logit_clamp: f64,
    pub score_rule: ScoreRule,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            feature: FeatureConfig::default(),
            hidden_dims: DEFAULT_CLASSIFIER_HIDDEN.to_vec(),
            train: TrainConfig {
                loss: Loss::CrossEntropy,
                ..TrainConfig::default()
            },
            logit_clamp: DEFAULT_LOGIT_CLAMP,
            score_rule: ScoreRule::Logit,
        }
    }
}

/// Stacked log-mel rows for every train-split normal clip of one
/// (machine, section), both domains pooled, in index order.
pub fn training_rows(
    index: &DatasetIndex,
    machine: &str,
    section: u8,
    feature: &FeatureConfig,
) -> Result<Mat> {
    let clips = index.select(machine, section, Some(Split::Train), None);
    if clips.is_empty() {
        return Err(Error::Data(format!(
            "no training clips for machine {machine} section {section}"
        )));
    }
    for domain in Domain::ALL {
        if !clips.iter().any(|(_, m)| m.domain == domain) {
            return Err(Error::Data(format!(
                "machine {machine} section {section}: no {domain}-domain training clips"
            )));
        }
    }
    let mut parts = Vec::with_capacity(clips.len());
    for (path, _) in &clips {
        let clip = load_wav(path)?;
        let lm = log_mel(&clip, feature)?;
        parts.push(stack(&lm, feature.stack_frames)?);
    }
    let refs: Vec<&Mat> = parts.iter().collect();
    Ok(Mat::vstack(&refs))
}

/// Trains the reconstruction autoencoder for one (machine, section).
pub fn train_ae(
    index: &DatasetIndex,
    machine: &str,
    section: u8,
    config: &AeConfig,
) -> Result<(AeDetector, Vec<f64>)> {
    if config.train.loss != Loss::Mse {
        return Err(Error::Config("autoencoder training uses the mse loss".into()));
    }
    let mut rows = training_rows(index, machine, section, &config.feature)?;
    let standardizer = Standardizer::fit(&rows);
    standardizer.apply(&mut rows);
    let dim = config.feature.feature_dim();

    let mut dims = Vec::with_capacity(config.hidden_dims.len() + 2);
    dims.push(dim);
    dims.extend_from_slice(&config.hidden_dims);
    dims.push(dim);
    let mut acts = vec![Activation::Relu; dims.len() - 1];
    *acts.last_mut().unwrap() = Activation::Linear;

    let mut init_rng = rng::stream(config.train.seed, "ae/init");
    let mut net = Mlp::new(&dims, &acts, &mut init_rng)?;
    let history = nnet::train(&mut net, &rows, Targets::Reconstruction, &config.train)?;
    Ok((
        AeDetector {
            net,
            feature_config: config.feature.clone(),
            standardizer,
        },
        history,
    ))
}

/// Anomaly score: mean over the clip's feature rows of the per-dimension
/// mean squared reconstruction error.
pub fn score_ae(det: &AeDetector, clip: &AudioClip) -> Result<f64> {
    let lm = log_mel(clip, &det.feature_config)?;
    let mut rows = stack(&lm, det.feature_config.stack_frames)?;
    det.standardizer.apply(&mut rows);
    let output = det.net.forward_batch(&rows)?;
    let dim = rows.cols() as f64;
    let mut total = 0.0;
    for t in 0..rows.rows() {
        let mut acc = 0.0;
        for (y, x) in output.row(t).iter().zip(rows.row(t)) {
            let d = y - x;
            acc += d * d;
        }
        total += acc / dim;
    }
    Ok(total / rows.rows() as f64)
}

/// Trains the per-machine section classifier over all sections' training
/// rows labeled by section.
pub fn train_classifier(
    index: &DatasetIndex,
    machine: &str,
    config: &ClassifierConfig,
) -> Result<(SectionClassifier, Vec<f64>)> {
    if config.train.loss != Loss::CrossEntropy {
        return Err(Error::Config("classifier training uses the cross_entropy loss".into()));
    }
    if !(config.logit_clamp > 0.0 && config.logit_clamp < 0.5) {
        return Err(Error::Config(format!(
            "logit clamp {} outside (0, 0.5)",
            config.logit_clamp
        )));
    }
    let sections: Vec<u8> = index
        .sections_per_machine
        .get(machine)
        .map(|s| s.iter().copied().collect())
        .unwrap_or_default();
    if sections.len() < 2 {
        return Err(Error::Config(format!(
            "machine {machine} has {} section(s); section classification needs at least 2",
            sections.len()
        )));
    }

    let mut parts = Vec::new();
    let mut labels = Vec::new();
    for (label, &section) in sections.iter().enumerate() {
        let rows = training_rows(index, machine, section, &config.feature)?;
        labels.extend(std::iter::repeat_n(label, rows.rows()));
        parts.push(rows);
    }
    let refs: Vec<&Mat> = parts.iter().collect();
    let mut data = Mat::vstack(&refs);
    let standardizer = Standardizer::fit(&data);
    standardizer.apply(&mut data);

    let mut dims = Vec::with_capacity(config.hidden_dims.len() + 2);
    dims.push(config.feature.feature_dim());
    dims.extend_from_slice(&config.hidden_dims);
    dims.push(sections.len());
    let mut acts = vec![Activation::Relu; dims.len() - 1];
    *acts.last_mut().unwrap() = Activation::Softmax;

    let mut init_rng = rng::stream(config.train.seed, "classifier/init");
    let mut net = Mlp::new(&dims, &acts, &mut init_rng)?;
    let history = nnet::train(&mut net, &data, Targets::Labels(&labels), &config.train)?;
    Ok((
        SectionClassifier {
            net,
            section_labels: sections,
            feature_config: config.feature.clone(),
            standardizer,
            logit_clamp: config.logit_clamp,
            score_rule: config.score_rule,
        },
        history,
    ))
}

/// Per-row score from the clamped correct-section probability.
fn row_score(p_raw: f64, clamp: f64, rule: ScoreRule) -> f64 {
    let p = p_raw.clamp(clamp, 1.0 - clamp);
    match rule {
        ScoreRule::Logit => ((1.0 - p) / p).ln(),
        ScoreRule::NegLogProb => -p.ln(),
    }
}

/// Anomaly score: the per-frame negative logit (or negative log
/// probability) of the correct section, averaged over frames.
pub fn score_classifier(
    det: &SectionClassifier,
    clip: &AudioClip,
    true_section: u8,
) -> Result<f64> {
    let label = det
        .section_labels
        .iter()
        .position(|&s| s == true_section)
        .ok_or_else(|| {
            Error::Input(format!(
                "section {true_section} unknown to this classifier (labels {:?})",
                det.section_labels
            ))
        })?;
    let lm = log_mel(clip, &det.feature_config)?;
    let mut rows = stack(&lm, det.feature_config.stack_frames)?;
    det.standardizer.apply(&mut rows);
    let probs = det.net.forward_batch(&rows)?;
    let mut total = 0.0;
    for t in 0..probs.rows() {
        total += row_score(probs.get(t, label), det.logit_clamp, det.score_rule);
    }
    Ok(total / probs.rows() as f64)
}

/// Frame-level section accuracy of a classifier over raw feature rows.
pub fn classifier_frame_accuracy(
    det: &SectionClassifier,
    rows: &Mat,
    labels: &[usize],
) -> Result<f64> {
    if rows.rows() != labels.len() {
        return Err(Error::Input(format!(
            "{} labels for {} rows",
            labels.len(),
            rows.rows()
        )));
    }
    let mut rows = rows.clone();
    det.standardizer.apply(&mut rows);
    let probs = det.net.forward_batch(&rows)?;
    let mut correct = 0usize;
    for (t, &label) in labels.iter().enumerate() {
        let row = probs.row(t);
        let argmax = (0..row.len())
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .unwrap();
        if argmax == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}

impl Scorer for AeDetector {
    fn score(&self, clip: &AudioClip, _meta: &ClipMetadata) -> Result<f64> {
        score_ae(self, clip)
    }
}

impl Scorer for SectionClassifier {
    fn score(&self, clip: &AudioClip, meta: &ClipMetadata) -> Result<f64> {
        score_classifier(self, clip, meta.section)
    }
}

#[derive(Serialize, Deserialize)]
struct DetectorSidecar {
    kind: String,
    feature: FeatureConfig,
    standardizer: Standardizer,
    #[serde(skip_serializing_if = "Option::is_none")]
    section_labels: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    logit_clamp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score_rule: Option<ScoreRule>,
}

fn write_sidecar(sidecar: &DetectorSidecar, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(sidecar)
        .map_err(|e| Error::Checkpoint(format!("sidecar encode: {e}")))?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(json.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_sidecar(path: &Path) -> Result<DetectorSidecar> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("sidecar decode: {e}")))
}

/// Saves an AE detector as `<stem>.asdm` plus `<stem>.json`.
pub fn save_ae(det: &AeDetector, stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();
    nnet::save_mlp(&det.net, stem.with_extension("asdm"))?;
    write_sidecar(
        &DetectorSidecar {
            kind: "ae".into(),
            feature: det.feature_config.clone(),
            standardizer: det.standardizer.clone(),
            section_labels: None,
            logit_clamp: None,
            score_rule: None,
        },
        &stem.with_extension("json"),
    )
}

pub fn load_ae(stem: impl AsRef<Path>) -> Result<AeDetector> {
    let stem = stem.as_ref();
    let sidecar = read_sidecar(&stem.with_extension("json"))?;
    if sidecar.kind != "ae" {
        return Err(Error::Checkpoint(format!("expected ae checkpoint, got {}", sidecar.kind)));
    }
    Ok(AeDetector {
        net: nnet::load_mlp(stem.with_extension("asdm"))?,
        feature_config: sidecar.feature,
        standardizer: sidecar.standardizer,
    })
}

/// Saves a section classifier as `<stem>.asdm` plus `<stem>.json`.
pub fn save_classifier(det: &SectionClassifier, stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();
    nnet::save_mlp(&det.net, stem.with_extension("asdm"))?;
    write_sidecar(
        &DetectorSidecar {
            kind: "classifier".into(),
            feature: det.feature_config.clone(),
            standardizer: det.standardizer.clone(),
            section_labels: Some(det.section_labels.clone()),
            logit_clamp: Some(det.logit_clamp),
            score_rule: Some(det.score_rule),
        },
        &stem.with_extension("json"),
    )
}

pub fn load_classifier(stem: impl AsRef<Path>) -> Result<SectionClassifier> {
    let stem = stem.as_ref();
    let sidecar = read_sidecar(&stem.with_extension("json"))?;
    if sidecar.kind != "classifier" {
        return Err(Error::Checkpoint(format!(
            "expected classifier checkpoint, got {}",
            sidecar.kind
        )));
    }
    Ok(SectionClassifier {
        net: nnet::load_mlp(stem.with_extension("asdm"))?,
        section_labels: sidecar
            .section_labels
            .ok_or_else(|| Error::Checkpoint("missing section_labels".into()))?,
        feature_config: sidecar.feature,
        standardizer: sidecar.standardizer,
        logit_clamp: sidecar.logit_clamp.unwrap_or(DEFAULT_LOGIT_CLAMP),
        score_rule: sidecar.score_rule.unwrap_or(ScoreRule::Logit),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Condition;

    fn small_feature_config() -> FeatureConfig {
        FeatureConfig {
            n_mels: 16,
            stack_frames: 2,
            ..FeatureConfig::default()
        }
    }

    fn tone_clip(freq: f64) -> AudioClip {
        let samples = (0..8192)
            .map(|n| 0.5 * (std::f64::consts::TAU * freq * n as f64 / 16_000.0).sin())
            .collect();
        AudioClip::new(samples, 16_000).unwrap()
    }

    /// Classifier with zero weights and rigged output bias so that the
    /// softmax yields a fixed probability vector on any input.
    fn rigged_classifier(p_correct: f64, sections: Vec<u8>) -> SectionClassifier {
        let feature = small_feature_config();
        let classes = sections.len();
        let dims = [feature.feature_dim(), classes];
        let mut r = rng::stream(0, "rigged");
        let mut net = Mlp::new(&dims, &[Activation::Softmax], &mut r).unwrap();
        for v in net.layers[0].w.as_mut_slice() {
            *v = 0.0;
        }
        // Bias 0 gets p_correct, the rest split the remainder evenly.
        let rest = (1.0 - p_correct) / (classes as f64 - 1.0);
        net.layers[0].b = std::iter::once(p_correct.ln())
            .chain(std::iter::repeat_n(rest.ln(), classes - 1))
            .collect();
        SectionClassifier {
            net,
            section_labels: sections,
            standardizer: Standardizer::identity(feature.feature_dim()),
            feature_config: feature,
            logit_clamp: DEFAULT_LOGIT_CLAMP,
            score_rule: ScoreRule::Logit,
        }
    }

    #[test]
    fn identity_ae_scores_zero() {
        let feature = small_feature_config();
        let dim = feature.feature_dim();
        let mut r = rng::stream(1, "identity-ae");
        let mut net = Mlp::new(&[dim, dim], &[Activation::Linear], &mut r).unwrap();
        for v in net.layers[0].w.as_mut_slice() {
            *v = 0.0;
        }
        for i in 0..dim {
            net.layers[0].w.set(i, i, 1.0);
        }
        net.layers[0].b = vec![0.0; dim];
        let det = AeDetector {
            net,
            standardizer: Standardizer::identity(feature.feature_dim()),
            feature_config: feature,
        };
        let clip = tone_clip(440.0);
        assert_eq!(score_ae(&det, &clip).unwrap(), 0.0);
    }

    #[test]
    fn ae_scoring_is_pure() {
        let feature = small_feature_config();
        let dim = feature.feature_dim();
        let mut r = rng::stream(2, "pure-ae");
        let net = Mlp::new(&[dim, 8, dim], &[Activation::Relu, Activation::Linear], &mut r).unwrap();
        let det = AeDetector {
            net,
            standardizer: Standardizer::identity(feature.feature_dim()),
            feature_config: feature,
        };
        let clip = tone_clip(330.0);
        let a = score_ae(&det, &clip).unwrap();
        let b = score_ae(&det, &clip).unwrap();
        assert_eq!(a, b);
        assert!(a >= 0.0);
    }

    #[test]
    fn ae_score_stable_under_one_sample_circular_shift() {
        // Bin-centered steady tone (500 Hz = bin 32 at n_fft 1024): every
        // STFT magnitude is phase-invariant, so the score moves by at most
        // rounding noise.
        let feature = small_feature_config();
        let dim = feature.feature_dim();
        let mut r = rng::stream(3, "shift-ae");
        let net = Mlp::new(&[dim, 8, dim], &[Activation::Relu, Activation::Linear], &mut r).unwrap();
        let det = AeDetector {
            net,
            standardizer: Standardizer::identity(feature.feature_dim()),
            feature_config: feature,
        };
        let clip = tone_clip(500.0);
        let mut rotated = clip.samples.clone();
        rotated.rotate_left(1);
        let shifted = AudioClip::new(rotated, 16_000).unwrap();
        let a = score_ae(&det, &clip).unwrap();
        let b = score_ae(&det, &shifted).unwrap();
        assert!((a - b).abs() < 1e-6, "score moved {} -> {}", a, b);
    }

    #[test]
    fn classifier_logit_closed_forms() {
        let clip = tone_clip(440.0);
        // p = 0.5 -> logit 0.
        let det = rigged_classifier(0.5, vec![0, 1]);
        let s = score_classifier(&det, &clip, 0).unwrap();
        assert!(s.abs() < 1e-12, "got {s}");
        // p = 0.9 -> ln(1/9).
        let det = rigged_classifier(0.9, vec![0, 1]);
        let s = score_classifier(&det, &clip, 0).unwrap();
        assert!((s - (-2.197_224_577_336_219_6)).abs() < 1e-12, "got {s}");
        // Wrong section: p = 0.1 -> ln(9), symmetric.
        let s = score_classifier(&det, &clip, 1).unwrap();
        assert!((s - 2.197_224_577_336_219_6).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn classifier_clamp_bounds_score() {
        let clip = tone_clip(440.0);
        // p -> 1 numerically; the clamp must bound the score below.
        let det = rigged_classifier(1.0 - 1e-15, vec![0, 1]);
        let s = score_classifier(&det, &clip, 0).unwrap();
        let bound = (DEFAULT_LOGIT_CLAMP / (1.0 - DEFAULT_LOGIT_CLAMP)).ln();
        assert!((s - bound).abs() < 1e-9, "score {s} vs clamp bound {bound}");
    }

    #[test]
    fn classifier_unknown_section_is_input_error() {
        let clip = tone_clip(440.0);
        let det = rigged_classifier(0.5, vec![0, 1]);
        assert!(matches!(
            score_classifier(&det, &clip, 4),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn row_score_strictly_decreasing_in_p() {
        for rule in [ScoreRule::Logit, ScoreRule::NegLogProb] {
            let mut prev = f64::INFINITY;
            for i in 1..1000 {
                let p = i as f64 / 1000.0;
                let s = row_score(p, 1e-7, rule);
                assert!(s < prev, "rule {rule:?}: not decreasing at p={p}");
                prev = s;
            }
        }
    }

    #[test]
    fn neg_log_prob_rule_differs_from_logit() {
        let clip = tone_clip(440.0);
        let mut det = rigged_classifier(0.9, vec![0, 1]);
        det.score_rule = ScoreRule::NegLogProb;
        let s = score_classifier(&det, &clip, 0).unwrap();
        assert!((s - (-(0.9f64).ln())).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn detector_checkpoints_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let feature = small_feature_config();
        let dim = feature.feature_dim();
        let mut r = rng::stream(4, "ckpt");
        let net = Mlp::new(&[dim, 8, dim], &[Activation::Relu, Activation::Linear], &mut r).unwrap();
        let ae = AeDetector {
            net: net.clone(),
            standardizer: Standardizer::identity(feature.feature_dim()),
            feature_config: feature.clone(),
        };
        save_ae(&ae, dir.path().join("ae_motor_s0")).unwrap();
        let loaded = load_ae(dir.path().join("ae_motor_s0")).unwrap();
        assert_eq!(ae, loaded);

        let clf = rigged_classifier(0.7, vec![0, 1, 2]);
        save_classifier(&clf, dir.path().join("clf_motor")).unwrap();
        let loaded = load_classifier(dir.path().join("clf_motor")).unwrap();
        assert_eq!(clf, loaded);

        // Kind mismatch is rejected.
        assert!(load_ae(dir.path().join("clf_motor")).is_err());
    }

    #[test]
    fn scorer_trait_uses_metadata_section() {
        let clip = tone_clip(440.0);
        let det = rigged_classifier(0.9, vec![0, 1]);
        let meta = ClipMetadata {
            machine_type: "motor".into(),
            section: 1,
            domain: Domain::Source,
            split: Split::Test,
            condition: Condition::Unknown,
            clip_id: 0,
            attributes: String::new(),
        };
        let via_trait = det.score(&clip, &meta).unwrap();
        let direct = score_classifier(&det, &clip, 1).unwrap();
        assert_eq!(via_trait, direct);
    }
}
