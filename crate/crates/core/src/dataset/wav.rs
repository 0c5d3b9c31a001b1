//! PCM16 mono RIFF/WAVE reader and writer.
//!
//! Samples are scaled to [-1, 1] by dividing by 32768 on load; writing
//! quantizes with round-half-away-from-zero and clamps to [-32768, 32767],
//! so any clip already on the PCM16 lattice round-trips bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::AudioClip;

const PCM_SCALE: f64 = 32768.0;

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn format_err(path: &Path, field: &'static str, detail: impl Into<String>) -> Error {
    Error::WavFormat {
        path: path.to_path_buf(),
        field,
        detail: detail.into(),
    }
}

/// Loads a PCM16 mono WAV file.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" {
        return Err(format_err(path, "riff", "missing RIFF header"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(format_err(path, "wave", "missing WAVE form type"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (tag, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let chunk_id = &bytes[at..at + 4];
        let chunk_len = u32_at(&bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start + chunk_len;
        if body_end > bytes.len() {
            return Err(format_err(
                path,
                "chunk",
                format!("chunk {:?} overruns file", String::from_utf8_lossy(chunk_id)),
            ));
        }
        match chunk_id {
            b"fmt " => {
                if chunk_len < 16 {
                    return Err(format_err(path, "fmt", "fmt chunk shorter than 16 bytes"));
                }
                fmt = Some((
                    u16_at(&bytes, body_start),
                    u16_at(&bytes, body_start + 2),
                    u32_at(&bytes, body_start + 4),
                    u16_at(&bytes, body_start + 14),
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // Chunks are word-aligned: odd sizes carry a pad byte.
        at = body_end + (chunk_len & 1);
    }

    let (tag, channels, sample_rate, bits) =
        fmt.ok_or_else(|| format_err(path, "fmt", "missing fmt chunk"))?;
    if tag != 1 {
        return Err(format_err(path, "audio_format", format!("expected PCM (1), got {tag}")));
    }
    if channels != 1 {
        return Err(format_err(path, "channels", format!("expected 1 channel, got {channels}")));
    }
    if bits != 16 {
        return Err(format_err(path, "bits_per_sample", format!("expected 16, got {bits}")));
    }
    if sample_rate == 0 {
        return Err(format_err(path, "sample_rate", "sample rate is zero"));
    }
    let data = data.ok_or_else(|| format_err(path, "data", "missing data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(format_err(path, "data", "odd data chunk length for 16-bit samples"));
    }

    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|pair| f64::from(i16::from_le_bytes([pair[0], pair[1]])) / PCM_SCALE)
        .collect();
    if samples.is_empty() {
        return Err(format_err(path, "data", "empty data chunk"));
    }
    Ok(AudioClip {
        samples,
        sample_rate_hz: sample_rate,
    })
}

/// Symmetric quantizer: round-half-away-from-zero, clamp to i16 range.
pub fn quantize_sample(x: f64) -> i16 {
    let scaled = (x * PCM_SCALE).round(); // f64::round is half-away-from-zero
    scaled.clamp(-32768.0, 32767.0) as i16
}

/// Writes a clip as PCM16 mono RIFF/WAVE.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    clip.validate()?;

    let n = clip.samples.len();
    let data_len = (n * 2) as u32;
    let byte_rate = clip.sample_rate_hz * 2;

    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&clip.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        out.extend_from_slice(&quantize_sample(s).to_le_bytes());
    }

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmp_wav(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // Keep the tempdir alive by leaking it; tests are short-lived.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn quantizer_boundaries() {
        assert_eq!(quantize_sample(1.0), 32767);
        assert_eq!(quantize_sample(-1.0), -32768);
        assert_eq!(quantize_sample(0.0), 0);
        // half-away-from-zero
        assert_eq!(quantize_sample(0.5 / 32768.0), 1);
        assert_eq!(quantize_sample(-0.5 / 32768.0), -1);
    }

    #[test]
    fn zero_clip_writes_zero_data_chunk() {
        let clip = AudioClip::new(vec![0.0; 64], 16_000).unwrap();
        let path = tmp_wav("zero.wav");
        write_wav(&clip, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[36..40], b"data");
        assert!(bytes[44..].iter().all(|&b| b == 0));
        assert_eq!(bytes[44..].len(), 128);
    }

    #[test]
    fn round_trip_preserves_lattice_samples() {
        let samples: Vec<f64> = (-4i32..=4).map(|n| f64::from(n * 1000) / 32768.0).collect();
        let clip = AudioClip::new(samples.clone(), 16_000).unwrap();
        let path = tmp_wav("lattice.wav");
        write_wav(&clip, &path).unwrap();
        let loaded = load_wav(&path).unwrap();
        assert_eq!(loaded.samples, samples);
        assert_eq!(loaded.sample_rate_hz, 16_000);
    }

    #[test]
    fn rejects_stereo() {
        let path = tmp_wav("stereo.wav");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&40u32.to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes()); // stereo
        bytes.extend_from_slice(&16_000u32.to_le_bytes());
        bytes.extend_from_slice(&64_000u32.to_le_bytes());
        bytes.extend_from_slice(&4u16.to_le_bytes());
        bytes.extend_from_slice(&16u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        std::fs::write(&path, bytes).unwrap();
        match load_wav(&path).unwrap_err() {
            Error::WavFormat { field, .. } => assert_eq!(field, "channels"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn rejects_missing_file() {
        assert!(matches!(load_wav("/nonexistent/clip.wav"), Err(Error::Io { .. })));
    }

    #[test]
    fn skips_extra_chunks() {
        // LIST chunk between fmt and data must be ignored.
        let path = tmp_wav("extra.wav");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&0u32.to_le_bytes()); // size not checked
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&16_000u32.to_le_bytes());
        bytes.extend_from_slice(&32_000u32.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes());
        bytes.extend_from_slice(&16u16.to_le_bytes());
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]); // odd size + pad byte
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1000i16.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        let clip = load_wav(&path).unwrap();
        assert_eq!(clip.samples, vec![1000.0 / 32768.0]);
    }

    proptest! {
        // load_wav ∘ write_wav is the identity on the PCM16 lattice.
        #[test]
        fn pcm_lattice_round_trip(values in proptest::collection::vec(-32768i32..=32767, 1..256),
                                  rate in 1u32..96_000) {
            let samples: Vec<f64> = values.iter().map(|&v| f64::from(v) / 32768.0).collect();
            let clip = AudioClip::new(samples.clone(), rate).unwrap();
            let path = tmp_wav("prop.wav");
            write_wav(&clip, &path).unwrap();
            let loaded = load_wav(&path).unwrap();
            prop_assert_eq!(loaded.samples, samples);
            prop_assert_eq!(loaded.sample_rate_hz, rate);
        }
    }
}
