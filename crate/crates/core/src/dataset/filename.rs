//! Clip filename grammar:
//! `section_<NN>_<domain>_<split>_<condition>_<NNNN>_<attributes>.wav`
//!
//! Attributes are the raw trailing token string and may be empty or
//! contain further underscores.

use crate::error::{Error, Result};

use super::{ClipMetadata, Condition, Domain, Split};

fn bad(name: &str, reason: impl Into<String>) -> Error {
    Error::Filename {
        name: name.to_string(),
        reason: reason.into(),
    }
}

/// Parses a clip filename into metadata.
pub fn parse_filename(name: &str) -> Result<ClipMetadata> {
    let stem = name
        .strip_suffix(".wav")
        .ok_or_else(|| bad(name, "missing .wav extension"))?;
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() < 7 {
        return Err(bad(
            name,
            format!("expected at least 7 underscore-separated fields, got {}", parts.len()),
        ));
    }
    if parts[0] != "section" {
        return Err(bad(name, format!("expected leading token \"section\", got {:?}", parts[0])));
    }
    let section: u8 = parts[1]
        .parse()
        .map_err(|_| bad(name, format!("non-numeric section token {:?}", parts[1])))?;
    let domain: Domain = parts[2].parse().map_err(|e| bad(name, e))?;
    let split: Split = parts[3].parse().map_err(|e| bad(name, e))?;
    let condition: Condition = parts[4].parse().map_err(|e| bad(name, e))?;
    let clip_id: u32 = parts[5]
        .parse()
        .map_err(|_| bad(name, format!("non-numeric clip id token {:?}", parts[5])))?;
    let attributes = parts[6..].join("_");

    let meta = ClipMetadata {
        // Machine type comes from the directory layout, not the filename;
        // the caller overwrites it when indexing.
        machine_type: "unknown-machine".to_string(),
        section,
        domain,
        split,
        condition,
        clip_id,
        attributes,
    };
    if meta.section > super::MAX_SECTION {
        return Err(bad(name, format!("section {} outside 0..={}", meta.section, super::MAX_SECTION)));
    }
    if meta.condition == Condition::Unknown && meta.split != Split::Test {
        return Err(bad(name, "condition \"unknown\" is only valid for test clips"));
    }
    if meta.split == Split::Train && meta.condition == Condition::Anomaly {
        return Err(bad(name, "training clips are never anomalous"));
    }
    Ok(meta)
}

/// Formats metadata back into a filename; inverse of [`parse_filename`].
pub fn format_filename(meta: &ClipMetadata) -> String {
    format!(
        "section_{:02}_{}_{}_{}_{:04}_{}.wav",
        meta.section, meta.domain, meta.split, meta.condition, meta.clip_id, meta.attributes
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_conformant_names() {
        let meta = parse_filename("section_00_source_train_normal_0042_vel_6.wav").unwrap();
        assert_eq!(meta.section, 0);
        assert_eq!(meta.domain, Domain::Source);
        assert_eq!(meta.split, Split::Train);
        assert_eq!(meta.condition, Condition::Normal);
        assert_eq!(meta.clip_id, 42);
        assert_eq!(meta.attributes, "vel_6");

        let meta = parse_filename("section_03_target_test_anomaly_0001_noattr.wav").unwrap();
        assert_eq!(meta.section, 3);
        assert_eq!(meta.domain, Domain::Target);
        assert_eq!(meta.split, Split::Test);
        assert_eq!(meta.condition, Condition::Anomaly);
        assert_eq!(meta.clip_id, 1);
        assert_eq!(meta.attributes, "noattr");
    }

    #[test]
    fn empty_attributes_round_trip() {
        let meta = parse_filename("section_01_source_test_unknown_0007_.wav").unwrap();
        assert_eq!(meta.attributes, "");
        assert_eq!(
            format_filename(&meta),
            "section_01_source_test_unknown_0007_.wav"
        );
    }

    #[test]
    fn rejects_malformed_names() {
        for name in [
            "sec_bad_name.wav",
            "section_xx_source_train_normal_0001_a.wav",
            "section_00_middle_train_normal_0001_a.wav",
            "section_00_source_dev_normal_0001_a.wav",
            "section_00_source_train_broken_0001_a.wav",
            "section_00_source_train_normal_12x_a.wav",
            "section_00_source_train_normal_0001_a.mp3",
            "section_00_source_train_normal.wav",
            "section_06_source_train_normal_0001_a.wav",
        ] {
            let err = parse_filename(name).unwrap_err();
            assert!(matches!(err, Error::Filename { .. }), "{name}: {err}");
        }
    }

    #[test]
    fn rejects_cross_field_violations() {
        // unknown condition outside the test split
        assert!(parse_filename("section_00_source_train_unknown_0001_a.wav").is_err());
        // anomalous training clip
        assert!(parse_filename("section_00_source_train_anomaly_0001_a.wav").is_err());
    }

    fn arb_metadata() -> impl Strategy<Value = ClipMetadata> {
        (
            0u8..=5,
            prop_oneof![Just(Domain::Source), Just(Domain::Target)],
            prop_oneof![Just(Split::Train), Just(Split::Test)],
            0u32..100_000,
            "[a-z0-9][a-z0-9_]{0,18}",
        )
            .prop_flat_map(|(section, domain, split, clip_id, attributes)| {
                let conditions = match split {
                    Split::Train => vec![Condition::Normal],
                    Split::Test => {
                        vec![Condition::Normal, Condition::Anomaly, Condition::Unknown]
                    }
                };
                (
                    Just(section),
                    Just(domain),
                    Just(split),
                    Just(clip_id),
                    Just(attributes),
                    proptest::sample::select(conditions),
                )
            })
            .prop_map(|(section, domain, split, clip_id, attributes, condition)| ClipMetadata {
                machine_type: "unknown-machine".to_string(),
                section,
                domain,
                split,
                condition,
                clip_id,
                attributes,
            })
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(meta in arb_metadata()) {
            let name = format_filename(&meta);
            let parsed = parse_filename(&name).unwrap();
            prop_assert_eq!(parsed, meta);
        }
    }
}
