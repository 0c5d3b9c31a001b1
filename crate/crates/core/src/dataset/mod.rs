//! Domain types, clip filename grammar, WAV I/O, and the dataset index.

mod filename;
mod index;
mod wav;

pub use filename::{format_filename, parse_filename};
pub use index::build_index;
pub use wav::{load_wav, write_wav};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample rate used by all challenge-conformant data.
pub const CHALLENGE_SAMPLE_RATE_HZ: u32 = 16_000;

/// Highest section number the filename grammar admits.
pub const MAX_SECTION: u8 = 5;

/// Which acoustic condition a clip was recorded under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Source, Domain::Target];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "source" => Ok(Domain::Source),
            "target" => Ok(Domain::Target),
            other => Err(format!("unknown domain token {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split token {other:?}")),
        }
    }
}

/// Condition label. `Unknown` appears only on test clips before ground
/// truth is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Normal,
    Anomaly,
    Unknown,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Normal => "normal",
            Condition::Anomaly => "anomaly",
            Condition::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normal" => Ok(Condition::Normal),
            "anomaly" => Ok(Condition::Anomaly),
            "unknown" => Ok(Condition::Unknown),
            other => Err(format!("unknown condition token {other:?}")),
        }
    }
}

/// Mono waveform plus its sample rate. Samples live in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        let clip = AudioClip {
            samples,
            sample_rate_hz,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Input("audio clip has no samples".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::Input("sample rate must be positive".into()));
        }
        if let Some(bad) = self
            .samples
            .iter()
            .find(|v| !v.is_finite() || v.abs() > 1.0)
        {
            return Err(Error::Input(format!(
                "sample {bad} outside [-1, 1] or non-finite"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Everything the filename grammar encodes about one clip.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClipMetadata {
    pub machine_type: String,
    pub section: u8,
    pub domain: Domain,
    pub split: Split,
    pub condition: Condition,
    pub clip_id: u32,
    pub attributes: String,
}

impl ClipMetadata {
    /// Cross-field invariants: sections stay in grammar range, `unknown`
    /// is reserved for test clips, and training data is all-normal.
    pub fn validate(&self) -> Result<()> {
        if self.machine_type.is_empty() {
            return Err(Error::Input("machine type must be non-empty".into()));
        }
        if self.section > MAX_SECTION {
            return Err(Error::Input(format!(
                "section {} outside 0..={MAX_SECTION}",
                self.section
            )));
        }
        if self.condition == Condition::Unknown && self.split != Split::Test {
            return Err(Error::Input(
                "condition 'unknown' is only valid for test clips".into(),
            ));
        }
        if self.split == Split::Train && self.condition == Condition::Anomaly {
            return Err(Error::Input(
                "training clips are never anomalous".into(),
            ));
        }
        Ok(())
    }
}

/// Index over a dataset tree: machines, their sections, and every clip.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetIndex {
    pub machines: BTreeSet<String>,
    pub sections_per_machine: BTreeMap<String, BTreeSet<u8>>,
    pub clips: Vec<(PathBuf, ClipMetadata)>,
}

impl DatasetIndex {
    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    /// Clips for one (machine, section) cell, optionally filtered.
    pub fn select(
        &self,
        machine: &str,
        section: u8,
        split: Option<Split>,
        domain: Option<Domain>,
    ) -> Vec<&(PathBuf, ClipMetadata)> {
        self.clips
            .iter()
            .filter(|(_, m)| {
                m.machine_type == machine
                    && m.section == section
                    && split.is_none_or(|s| m.split == s)
                    && domain.is_none_or(|d| m.domain == d)
            })
            .collect()
    }

    /// All (machine, section) cells in deterministic order.
    pub fn cells(&self) -> Vec<(String, u8)> {
        let mut out = Vec::new();
        for (machine, sections) in &self.sections_per_machine {
            for &section in sections {
                out.push((machine.clone(), section));
            }
        }
        out
    }
}
