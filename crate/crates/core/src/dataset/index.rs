//! Dataset index construction from a `<machine>/<split>/` directory tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{parse_filename, ClipMetadata, DatasetIndex, Split};

/// Scans `root` and builds a deterministic index.
///
/// Layout: `<root>/<machine>/{train,test}/<clip>.wav`. Non-WAV files are
/// ignored. A duplicate (machine, section, domain, split, clip id) key is
/// an integrity error.
pub fn build_index(root: impl AsRef<Path>) -> Result<DatasetIndex> {
    let root = root.as_ref();
    let mut index = DatasetIndex::default();
    if !root.exists() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root does not exist"),
        ));
    }

    let mut seen: BTreeSet<(String, u8, super::Domain, Split, u32)> = BTreeSet::new();
    let mut machines: BTreeSet<String> = BTreeSet::new();
    let mut sections: BTreeMap<String, BTreeSet<u8>> = BTreeMap::new();

    for machine_entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let machine_entry = machine_entry.map_err(|e| Error::io(root, e))?;
        let machine_path = machine_entry.path();
        if !machine_path.is_dir() {
            continue;
        }
        let machine = machine_entry.file_name().to_string_lossy().into_owned();
        for split in [Split::Train, Split::Test] {
            let split_dir = machine_path.join(split.as_str());
            if !split_dir.is_dir() {
                continue;
            }
            for clip_entry in fs::read_dir(&split_dir).map_err(|e| Error::io(&split_dir, e))? {
                let clip_entry = clip_entry.map_err(|e| Error::io(&split_dir, e))?;
                let clip_path = clip_entry.path();
                if clip_path.extension().and_then(|e| e.to_str()) != Some("wav") {
                    continue;
                }
                let name = clip_entry.file_name().to_string_lossy().into_owned();
                let mut meta: ClipMetadata = parse_filename(&name)?;
                meta.machine_type = machine.clone();
                if meta.split != split {
                    return Err(Error::Integrity(format!(
                        "clip {name} declares split {} but lives under {}/",
                        meta.split, split
                    )));
                }
                let key = (
                    machine.clone(),
                    meta.section,
                    meta.domain,
                    meta.split,
                    meta.clip_id,
                );
                if !seen.insert(key) {
                    return Err(Error::Integrity(format!(
                        "duplicate clip key (machine={machine}, section={}, domain={}, split={}, id={})",
                        meta.section, meta.domain, meta.split, meta.clip_id
                    )));
                }
                machines.insert(machine.clone());
                sections.entry(machine.clone()).or_default().insert(meta.section);
                index.clips.push((clip_path, meta));
            }
        }
    }

    // Deterministic regardless of directory enumeration order.
    index.clips.sort_by(|(pa, ma), (pb, mb)| {
        (
            &ma.machine_type,
            ma.section,
            ma.domain,
            ma.split,
            ma.clip_id,
            pa,
        )
            .cmp(&(&mb.machine_type, mb.section, mb.domain, mb.split, mb.clip_id, pb))
    });
    index.machines = machines;
    index.sections_per_machine = sections;
    Ok(index)
}
