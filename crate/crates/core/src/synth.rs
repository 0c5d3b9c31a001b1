//! Deterministic synthetic machine-sound generator with controlled
//! domain shift.
//!
//! A normal clip is a five-harmonic stack at a (section, domain)-specific
//! fundamental plus domain-colored noise at 10 dB SNR. Anomalies either
//! detune the third harmonic by +6% or add a 0.2 s broadband burst at
//! 0 dB SNR. Every clip derives its own PRNG stream from the master seed
//! and its identity, so generation order (or parallelism) cannot change
//! any sample.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{
    build_index, format_filename, write_wav, AudioClip, ClipMetadata, Condition, DatasetIndex,
    Domain, Split, CHALLENGE_SAMPLE_RATE_HZ, MAX_SECTION,
};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const HARMONICS: usize = 5;
const NORMAL_SNR_DB: f64 = 10.0;
const DETUNE_RATIO: f64 = 1.06;
const BURST_SECONDS: f64 = 0.2;
const PEAK_TARGET: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseColor {
    White,
    Pink,
}

impl NoiseColor {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseColor::White => "white",
            NoiseColor::Pink => "pink",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    DetunedHarmonic,
    BroadbandBurst,
}

/// Acoustic recipe for one synthetic machine type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub name: String,
    /// Fundamental frequency per section index.
    pub base_fundamental_hz: Vec<f64>,
    /// Multiplicative fundamental shift applied in the target domain.
    pub target_shift_ratio: f64,
    pub noise_color_source: NoiseColor,
    pub noise_color_target: NoiseColor,
    pub anomaly_kind: AnomalyKind,
}

impl MachineSpec {
    pub fn validate(&self, sample_rate_hz: u32, sections: usize) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("machine name must be non-empty".into()));
        }
        if self.base_fundamental_hz.len() < sections {
            return Err(Error::Config(format!(
                "machine {} defines {} fundamentals for {} sections",
                self.name,
                self.base_fundamental_hz.len(),
                sections
            )));
        }
        let quarter = f64::from(sample_rate_hz) / 4.0;
        for &f0 in &self.base_fundamental_hz {
            if !(f0 > 0.0 && f0 < quarter) {
                return Err(Error::Config(format!(
                    "machine {}: fundamental {f0} Hz outside (0, {quarter})",
                    self.name
                )));
            }
        }
        if !(0.8..=1.25).contains(&self.target_shift_ratio) {
            return Err(Error::Config(format!(
                "machine {}: target shift ratio {} outside [0.8, 1.25]",
                self.name, self.target_shift_ratio
            )));
        }
        Ok(())
    }

    pub fn noise_color(&self, domain: Domain) -> NoiseColor {
        match domain {
            Domain::Source => self.noise_color_source,
            Domain::Target => self.noise_color_target,
        }
    }

    pub fn fundamental(&self, section: u8, domain: Domain) -> f64 {
        let base = self.base_fundamental_hz[section as usize];
        match domain {
            Domain::Source => base,
            Domain::Target => base * self.target_shift_ratio,
        }
    }
}

/// Generator settings for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub machines: Vec<MachineSpec>,
    pub sections_per_machine: usize,
    pub n_source_train: usize,
    pub n_target_train: usize,
    pub n_test_per_domain_per_condition: usize,
    pub clip_seconds: f64,
    pub sample_rate_hz: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            machines: default_machines(2),
            sections_per_machine: 3,
            n_source_train: 990,
            n_target_train: 10,
            n_test_per_domain_per_condition: 25,
            clip_seconds: 2.0,
            sample_rate_hz: CHALLENGE_SAMPLE_RATE_HZ,
        }
    }
}

impl SynthConfig {
    /// Desk-scale preset: 90 source / 9 target training clips per section
    /// keeps the 10:1 source-to-target ratio while an end-to-end run
    /// stays in the seconds-to-minutes range.
    pub fn mini(seed: u64) -> Self {
        SynthConfig {
            seed,
            n_source_train: 90,
            n_target_train: 9,
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.machines.is_empty() {
            return Err(Error::Config("at least one machine spec required".into()));
        }
        if self.sections_per_machine == 0
            || self.sections_per_machine > usize::from(MAX_SECTION) + 1
        {
            return Err(Error::Config(format!(
                "sections_per_machine {} outside 1..={}",
                self.sections_per_machine,
                MAX_SECTION + 1
            )));
        }
        if self.n_source_train == 0
            || self.n_target_train == 0
            || self.n_test_per_domain_per_condition == 0
        {
            return Err(Error::Config("all clip counts must be at least 1".into()));
        }
        if self.n_target_train as f64 / self.n_source_train as f64 > 0.1 {
            return Err(Error::Config(format!(
                "target/source training ratio {}/{} exceeds 0.1",
                self.n_target_train, self.n_source_train
            )));
        }
        if !(self.clip_seconds > 0.0) {
            return Err(Error::Config("clip_seconds must be positive".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for m in &self.machines {
            m.validate(self.sample_rate_hz, self.sections_per_machine)?;
            if !names.insert(&m.name) {
                return Err(Error::Config(format!("duplicate machine name {}", m.name)));
            }
        }
        Ok(())
    }

    pub fn clip_len(&self) -> usize {
        (self.clip_seconds * f64::from(self.sample_rate_hz)).round() as usize
    }
}

const MACHINE_NAMES: [&str; 8] = [
    "motor", "pump", "press", "drill", "lathe", "mixer", "winch", "crane",
];

/// Procedural machine roster: distinct fundamentals per section, an
/// alternating shift direction, and alternating anomaly kinds. Odd
/// machines also switch noise color in the target domain.
pub fn default_machines(count: usize) -> Vec<MachineSpec> {
    (0..count)
        .map(|i| {
            let name = MACHINE_NAMES
                .get(i)
                .map(|s| (*s).to_string())
                .unwrap_or_else(|| format!("machine{i:02}"));
            let base: Vec<f64> = (0..=usize::from(MAX_SECTION))
                .map(|s| 170.0 + 55.0 * i as f64 + 95.0 * s as f64)
                .collect();
            MachineSpec {
                name,
                base_fundamental_hz: base,
                target_shift_ratio: if i % 2 == 0 { 1.1 } else { 0.9 },
                noise_color_source: NoiseColor::White,
                noise_color_target: if i % 2 == 0 {
                    NoiseColor::White
                } else {
                    NoiseColor::Pink
                },
                anomaly_kind: if i % 2 == 0 {
                    AnomalyKind::DetunedHarmonic
                } else {
                    AnomalyKind::BroadbandBurst
                },
            }
        })
        .collect()
}

fn pink_filter(white: impl Iterator<Item = f64>) -> Vec<f64> {
    // Paul Kellet's pink noise filter.
    let (mut b0, mut b1, mut b2, mut b3, mut b4, mut b5, mut b6) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    white
        .map(|w| {
            b0 = 0.99886 * b0 + w * 0.0555179;
            b1 = 0.99332 * b1 + w * 0.0750759;
            b2 = 0.96900 * b2 + w * 0.1538520;
            b3 = 0.86650 * b3 + w * 0.3104856;
            b4 = 0.55000 * b4 + w * 0.5329522;
            b5 = -0.7616 * b5 - w * 0.0168980;
            let out = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
            b6 = w * 0.115926;
            out
        })
        .collect()
}

fn mean_square(samples: &[f64]) -> f64 {
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64
}

/// Synthesizes one clip. The caller supplies the clip's dedicated PRNG
/// stream (see [`clip_rng`]).
pub fn generate_clip(
    spec: &MachineSpec,
    meta: &ClipMetadata,
    clip_len: usize,
    sample_rate_hz: u32,
    rng: &mut Rng,
) -> Result<AudioClip> {
    if meta.condition == Condition::Unknown {
        return Err(Error::Input(
            "generate_clip needs a known condition (normal or anomaly)".into(),
        ));
    }
    if meta.section as usize >= spec.base_fundamental_hz.len() {
        return Err(Error::Input(format!(
            "section {} has no fundamental in machine {}",
            meta.section, spec.name
        )));
    }
    let sr = f64::from(sample_rate_hz);
    let f0 = spec.fundamental(meta.section, meta.domain);
    let detuned = meta.condition == Condition::Anomaly
        && spec.anomaly_kind == AnomalyKind::DetunedHarmonic;

    // Per-clip random phases and harmonic amplitudes give the normal
    // manifold some spread; without them every clip of a cell collapses
    // onto one spectral prototype and detection is trivial.
    let phases: Vec<f64> =
        (0..HARMONICS).map(|_| rng::uniform(rng, 0.0, std::f64::consts::TAU)).collect();
    let amplitudes: Vec<f64> =
        (0..HARMONICS).map(|_| rng::uniform(rng, 0.05, 1.0)).collect();
    let mut signal = vec![0.0f64; clip_len];
    for (h, (&phase, &amp)) in phases.iter().zip(&amplitudes).enumerate() {
        let mut freq = f0 * (h + 1) as f64;
        if detuned && h == 2 {
            freq *= DETUNE_RATIO;
        }
        let step = std::f64::consts::TAU * freq / sr;
        for (n, slot) in signal.iter_mut().enumerate() {
            *slot += amp * (step * n as f64 + phase).sin();
        }
    }
    let signal_power = mean_square(&signal);

    let white: Vec<f64> = (0..clip_len).map(|_| rng::gaussian(rng)).collect();
    let mut noise = match spec.noise_color(meta.domain) {
        NoiseColor::White => white,
        NoiseColor::Pink => pink_filter(white.into_iter()),
    };
    let noise_gain =
        (signal_power / (10f64.powf(NORMAL_SNR_DB / 10.0) * mean_square(&noise))).sqrt();
    for v in &mut noise {
        *v *= noise_gain;
    }

    let mut samples: Vec<f64> = signal.iter().zip(&noise).map(|(s, n)| s + n).collect();

    if meta.condition == Condition::Anomaly && spec.anomaly_kind == AnomalyKind::BroadbandBurst {
        let burst_len = ((BURST_SECONDS * sr).round() as usize).min(clip_len);
        let start = rng::below(rng, clip_len - burst_len + 1);
        let burst_gain = signal_power.sqrt(); // 0 dB relative to the harmonic stack
        for slot in &mut samples[start..start + burst_len] {
            *slot += burst_gain * rng::gaussian(rng);
        }
    }

    let peak = samples.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
    let gain = PEAK_TARGET / peak;
    for v in &mut samples {
        *v *= gain;
    }
    AudioClip::new(samples, sample_rate_hz)
}

/// The per-clip PRNG stream: decoupled per (machine, section, domain,
/// split, condition, clip id).
pub fn clip_rng(seed: u64, meta: &ClipMetadata) -> Rng {
    rng::stream(
        seed,
        &format!(
            "clip/{}/{}/{}/{}/{}/{}",
            meta.machine_type, meta.section, meta.domain, meta.split, meta.condition, meta.clip_id
        ),
    )
}

/// One ground-truth row for a test clip.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundTruthRow {
    pub machine: String,
    pub section: u8,
    pub domain: Domain,
    pub clip_id: u32,
    pub filename: String,
    pub condition: Condition,
}

pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

fn write_ground_truth(rows: &[GroundTruthRow], path: &Path) -> Result<()> {
    let mut out = String::from("filename,machine,section,domain,condition\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.filename, r.machine, r.section, r.domain, r.condition
        ));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Generates the full dataset tree under `root` and returns its index.
///
/// Layout: `<root>/<machine>/{train,test}/<clip>.wav` plus a
/// `ground_truth.csv` sidecar covering every test clip. Test filenames
/// carry the condition token `unknown`; the truth lives only in the
/// sidecar. Refuses to write into a non-empty root.
pub fn generate_dataset(config: &SynthConfig, root: impl AsRef<Path>) -> Result<DatasetIndex> {
    let root = root.as_ref();
    config.validate()?;
    if root.exists() {
        let occupied = fs::read_dir(root)
            .map_err(|e| Error::io(root, e))?
            .next()
            .is_some();
        if occupied {
            return Err(Error::Integrity(format!(
                "refusing to overwrite non-empty directory {}",
                root.display()
            )));
        }
    } else {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    }

    let clip_len = config.clip_len();
    let mut truth: Vec<GroundTruthRow> = Vec::new();

    for spec in &config.machines {
        let train_dir = root.join(&spec.name).join(Split::Train.as_str());
        let test_dir = root.join(&spec.name).join(Split::Test.as_str());
        fs::create_dir_all(&train_dir).map_err(|e| Error::io(&train_dir, e))?;
        fs::create_dir_all(&test_dir).map_err(|e| Error::io(&test_dir, e))?;

        for section in 0..config.sections_per_machine as u8 {
            // Training clips: normal only, both domains.
            for (domain, count) in [
                (Domain::Source, config.n_source_train),
                (Domain::Target, config.n_target_train),
            ] {
                for clip_id in 0..count as u32 {
                    let meta = ClipMetadata {
                        machine_type: spec.name.clone(),
                        section,
                        domain,
                        split: Split::Train,
                        condition: Condition::Normal,
                        clip_id,
                        attributes: attributes_for(spec, section, domain),
                    };
                    let mut rng = clip_rng(config.seed, &meta);
                    let clip =
                        generate_clip(spec, &meta, clip_len, config.sample_rate_hz, &mut rng)?;
                    write_wav(&clip, train_dir.join(format_filename(&meta)))?;
                }
            }

            // Test clips: ids are shuffled across conditions so the clip id
            // leaks nothing about the label.
            for domain in Domain::ALL {
                let n = config.n_test_per_domain_per_condition;
                let mut conditions = vec![Condition::Normal; n];
                conditions.extend(vec![Condition::Anomaly; n]);
                let mut id_rng = rng::stream(
                    config.seed,
                    &format!("test-ids/{}/{}/{}", spec.name, section, domain),
                );
                rng::shuffle(&mut id_rng, &mut conditions);

                for (clip_id, &condition) in conditions.iter().enumerate() {
                    let true_meta = ClipMetadata {
                        machine_type: spec.name.clone(),
                        section,
                        domain,
                        split: Split::Test,
                        condition,
                        clip_id: clip_id as u32,
                        attributes: attributes_for(spec, section, domain),
                    };
                    let mut rng = clip_rng(config.seed, &true_meta);
                    let clip =
                        generate_clip(spec, &true_meta, clip_len, config.sample_rate_hz, &mut rng)?;
                    let public_meta = ClipMetadata {
                        condition: Condition::Unknown,
                        ..true_meta.clone()
                    };
                    let filename = format_filename(&public_meta);
                    write_wav(&clip, test_dir.join(&filename))?;
                    truth.push(GroundTruthRow {
                        machine: spec.name.clone(),
                        section,
                        domain,
                        clip_id: clip_id as u32,
                        filename,
                        condition,
                    });
                }
            }
        }
    }

    truth.sort();
    write_ground_truth(&truth, &root.join(GROUND_TRUTH_FILE))?;
    build_index(root)
}

fn attributes_for(spec: &MachineSpec, section: u8, domain: Domain) -> String {
    format!(
        "f0_{:.0}_{}",
        spec.fundamental(section, domain),
        spec.noise_color(domain).as_str()
    )
}

/// Parses the ground-truth sidecar.
pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == "filename,machine,section,domain,condition" => {}
        Some((_, header)) => {
            return Err(Error::CsvParse {
                path: path.to_path_buf(),
                line: 1,
                detail: format!("unexpected header {header:?}"),
            })
        }
        None => {
            return Err(Error::CsvParse {
                path: path.to_path_buf(),
                line: 1,
                detail: "empty ground truth file".into(),
            })
        }
    }
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::CsvParse {
                path: path.to_path_buf(),
                line: i + 1,
                detail: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_err = |detail: String| Error::CsvParse {
            path: path.to_path_buf(),
            line: i + 1,
            detail,
        };
        let section: u8 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad section {:?}", fields[2])))?;
        let domain: Domain = fields[3].parse().map_err(parse_err)?;
        let condition: Condition = fields[4].parse().map_err(parse_err)?;
        if condition == Condition::Unknown {
            return Err(parse_err("ground truth condition must be normal or anomaly".into()));
        }
        let meta = crate::dataset::parse_filename(fields[0])?;
        rows.push(GroundTruthRow {
            machine: fields[1].to_string(),
            section,
            domain,
            clip_id: meta.clip_id,
            filename: fields[0].to_string(),
            condition,
        });
    }
    Ok(rows)
}

/// Convenience view: ground truth grouped per (machine, section).
pub fn truth_by_cell(rows: &[GroundTruthRow]) -> BTreeMap<(String, u8), Vec<&GroundTruthRow>> {
    let mut map: BTreeMap<(String, u8), Vec<&GroundTruthRow>> = BTreeMap::new();
    for r in rows {
        map.entry((r.machine.clone(), r.section)).or_default().push(r);
    }
    map
}
