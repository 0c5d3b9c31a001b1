//! Log-mel spectrogram front end with frame stacking.
//!
//! Framing is non-centered (no padding): frame `t` covers samples
//! `[t*hop, t*hop + n_fft)`, so the frame count is
//! `T = 1 + floor((L - n_fft) / hop)`. The window is the periodic Hann
//! window and the mel projection runs on the power spectrogram with a
//! `10*log10` compression floored at `log_floor`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dataset::{AudioClip, ClipMetadata};
use crate::error::{Error, Result};
use crate::mat::Mat;

use serde::{Deserialize, Serialize};

/// Front-end parameters shared by both detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub stack_frames: usize,
    pub fmin_hz: f64,
    /// Upper mel band edge; `None` means Nyquist.
    pub fmax_hz: Option<f64>,
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            n_fft: 1024,
            hop: 512,
            n_mels: 128,
            stack_frames: 5,
            fmin_hz: 0.0,
            fmax_hz: None,
            log_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.hop == 0 {
            return Err(Error::Config("n_fft and hop must be positive".into()));
        }
        if self.hop > self.n_fft {
            return Err(Error::Config(format!(
                "hop {} exceeds n_fft {}",
                self.hop, self.n_fft
            )));
        }
        if self.n_mels == 0 {
            return Err(Error::Config("n_mels must be at least 1".into()));
        }
        if self.stack_frames == 0 {
            return Err(Error::Config("stack_frames must be at least 1".into()));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::Config("log_floor must be positive".into()));
        }
        Ok(())
    }

    /// Dimension of one stacked feature row.
    pub fn feature_dim(&self) -> usize {
        self.n_mels * self.stack_frames
    }

    pub fn fmax_for(&self, sample_rate_hz: u32) -> f64 {
        self.fmax_hz
            .unwrap_or(f64::from(sample_rate_hz) / 2.0)
    }
}

/// Stacked log-mel rows for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub vectors: Mat,
    pub provenance: ClipMetadata,
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Number of non-centered frames for a clip of `len` samples.
pub fn frame_count(len: usize, n_fft: usize, hop: usize) -> Option<usize> {
    if len < n_fft {
        None
    } else {
        Some(1 + (len - n_fft) / hop)
    }
}

/// Magnitude STFT, `T x (n_fft/2 + 1)`.
pub fn stft_magnitude(clip: &AudioClip, n_fft: usize, hop: usize) -> Result<Mat> {
    let frames = frame_count(clip.samples.len(), n_fft, hop).ok_or_else(|| {
        Error::Input(format!(
            "clip of {} samples is shorter than n_fft {}",
            clip.samples.len(),
            n_fft
        ))
    })?;
    let bins = n_fft / 2 + 1;
    let window = hann_periodic(n_fft);
    let fft = FftPlanner::new().plan_fft_forward(n_fft);

    let mut out = Mat::zeros(frames, bins);
    let mut buf = vec![Complex64::default(); n_fft];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for t in 0..frames {
        let start = t * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(clip.samples[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        let row = out.row_mut(t);
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = buf[k].norm();
        }
    }
    Ok(out)
}

/// Triangular mel filterbank, `n_mels x (n_fft/2 + 1)`, unit peaks.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate_hz: u32,
    fmin_hz: f64,
    fmax_hz: f64,
) -> Result<Mat> {
    let nyquist = f64::from(sample_rate_hz) / 2.0;
    if !(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= nyquist) {
        return Err(Error::Config(format!(
            "mel band edges [{fmin_hz}, {fmax_hz}] invalid for nyquist {nyquist}"
        )));
    }
    let bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin_hz);
    let mel_hi = hz_to_mel(fmax_hz);
    let step = (mel_hi - mel_lo) / (n_mels + 1) as f64;
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + step * i as f64))
        .collect();

    let bin_hz = f64::from(sample_rate_hz) / n_fft as f64;
    let mut fb = Mat::zeros(n_mels, bins);
    for m in 0..n_mels {
        let (left, center, right) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
        let mut area = 0.0;
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let w = if f > left && f < center {
                (f - left) / (center - left)
            } else if (f - center).abs() == 0.0 {
                1.0
            } else if f > center && f < right {
                (right - f) / (right - center)
            } else {
                0.0
            };
            if w > 0.0 {
                fb.set(m, k, w);
                area += w;
            }
        }
        if area <= 0.0 {
            return Err(Error::Config(format!(
                "mel filter {m} (peak {center:.1} Hz) covers no FFT bin; n_mels {n_mels} too large for n_fft {n_fft}"
            )));
        }
    }
    Ok(fb)
}

/// Log-mel spectrogram, `T x n_mels`, in dB relative to the floor.
pub fn log_mel(clip: &AudioClip, config: &FeatureConfig) -> Result<Mat> {
    config.validate()?;
    let magnitude = stft_magnitude(clip, config.n_fft, config.hop)?;
    let fb = mel_filterbank(
        config.n_mels,
        config.n_fft,
        clip.sample_rate_hz,
        config.fmin_hz,
        config.fmax_for(clip.sample_rate_hz),
    )?;
    let frames = magnitude.rows();
    let bins = magnitude.cols();
    let mut out = Mat::zeros(frames, config.n_mels);
    for t in 0..frames {
        let mag = magnitude.row(t);
        for m in 0..config.n_mels {
            let filt = fb.row(m);
            let mut acc = 0.0;
            for k in 0..bins {
                let w = filt[k];
                if w != 0.0 {
                    acc += w * mag[k] * mag[k];
                }
            }
            out.set(t, m, 10.0 * acc.max(config.log_floor).log10());
        }
    }
    Ok(out)
}

/// Concatenates `stack_frames` consecutive log-mel frames per output row.
pub fn stack(logmel: &Mat, stack_frames: usize) -> Result<Mat> {
    let frames = logmel.rows();
    let n_mels = logmel.cols();
    if stack_frames == 0 {
        return Err(Error::Input("stack_frames must be at least 1".into()));
    }
    if frames < stack_frames {
        return Err(Error::Input(format!(
            "cannot stack {stack_frames} frames out of {frames}"
        )));
    }
    let out_rows = frames - stack_frames + 1;
    let mut out = Mat::zeros(out_rows, n_mels * stack_frames);
    for t in 0..out_rows {
        let row = out.row_mut(t);
        for s in 0..stack_frames {
            row[s * n_mels..(s + 1) * n_mels].copy_from_slice(logmel.row(t + s));
        }
    }
    Ok(out)
}

/// Full front end for one clip.
pub fn extract_features(
    clip: &AudioClip,
    meta: &ClipMetadata,
    config: &FeatureConfig,
) -> Result<FeatureMatrix> {
    let lm = log_mel(clip, config)?;
    let vectors = stack(&lm, config.stack_frames)?;
    Ok(FeatureMatrix {
        vectors,
        provenance: meta.clone(),
    })
}

/// Writes a feature matrix to the flat binary cache format:
/// header = rows (u32 LE), cols (u32 LE); body = row-major f64 LE.
pub fn write_feature_cache(matrix: &Mat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(8 + matrix.as_slice().len() * 8);
    bytes.extend_from_slice(&u32::try_from(matrix.rows()).unwrap().to_le_bytes());
    bytes.extend_from_slice(&u32::try_from(matrix.cols()).unwrap().to_le_bytes());
    for v in matrix.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a feature matrix from the flat binary cache format.
pub fn read_feature_cache(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::Input(format!("feature cache {} truncated", path.display())));
    }
    let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = 8 + rows * cols * 8;
    if bytes.len() != expected {
        return Err(Error::Input(format!(
            "feature cache {}: expected {expected} bytes, got {}",
            path.display(),
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Mat::from_vec(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Condition, Domain, Split};

    fn meta() -> ClipMetadata {
        ClipMetadata {
            machine_type: "motor".into(),
            section: 0,
            domain: Domain::Source,
            split: Split::Train,
            condition: Condition::Normal,
            clip_id: 0,
            attributes: "t".into(),
        }
    }

    fn sine_clip(freq_hz: f64, len: usize, rate: u32) -> AudioClip {
        let samples = (0..len)
            .map(|n| 0.5 * (2.0 * std::f64::consts::PI * freq_hz * n as f64 / f64::from(rate)).sin())
            .collect();
        AudioClip::new(samples, rate).unwrap()
    }

    #[test]
    fn frame_count_matches_formula() {
        let clip = AudioClip::new(vec![0.0; 160_000], 16_000).unwrap();
        let m = stft_magnitude(&clip, 1024, 512).unwrap();
        assert_eq!(m.rows(), 311);
        assert_eq!(m.cols(), 513);
    }

    #[test]
    fn zero_clip_gives_zero_stft() {
        let clip = AudioClip::new(vec![0.0; 4096], 16_000).unwrap();
        let m = stft_magnitude(&clip, 1024, 512).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_clip_is_input_error() {
        let clip = AudioClip::new(vec![0.1; 100], 16_000).unwrap();
        assert!(matches!(stft_magnitude(&clip, 1024, 512), Err(Error::Input(_))));
    }

    #[test]
    fn bin_centered_sine_peaks_at_its_bin() {
        // Bin k = 32 at 16 kHz / 1024 = 500 Hz. The windowed DFT magnitude
        // at the center bin is amplitude * N/4 for the periodic Hann window.
        let rate = 16_000;
        let k = 32;
        let freq = f64::from(rate) * k as f64 / 1024.0;
        let clip = sine_clip(freq, 8192, rate);
        let m = stft_magnitude(&clip, 1024, 512).unwrap();
        for t in 0..m.rows() {
            let row = m.row(t);
            let argmax = (0..row.len())
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .unwrap();
            assert_eq!(argmax, k, "frame {t}");
            let expected = 0.5 * 1024.0 / 4.0;
            assert!(
                (row[k] - expected).abs() / expected < 1e-10,
                "frame {t}: |X[k]| = {} vs {expected}",
                row[k]
            );
        }
    }

    #[test]
    fn filterbank_shape_and_rows_positive() {
        let fb = mel_filterbank(128, 1024, 16_000, 0.0, 8000.0).unwrap();
        assert_eq!(fb.rows(), 128);
        assert_eq!(fb.cols(), 513);
        for m in 0..fb.rows() {
            let sum: f64 = fb.row(m).iter().sum();
            assert!(sum > 0.0, "filter {m} has zero area");
            assert!(fb.row(m).iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn filterbank_peaks_increase() {
        let fb = mel_filterbank(64, 1024, 16_000, 0.0, 8000.0).unwrap();
        let peaks: Vec<usize> = (0..fb.rows())
            .map(|m| {
                (0..fb.cols())
                    .max_by(|&a, &b| fb.get(m, a).total_cmp(&fb.get(m, b)))
                    .unwrap()
            })
            .collect();
        for pair in peaks.windows(2) {
            assert!(pair[0] <= pair[1], "peaks not monotone: {peaks:?}");
        }
    }

    #[test]
    fn too_many_mels_is_config_error() {
        // 400 filters over 513 bins squeezed into [0, 200] Hz leaves empty rows.
        let err = mel_filterbank(400, 1024, 16_000, 0.0, 200.0).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn zero_clip_log_mel_hits_floor() {
        let clip = AudioClip::new(vec![0.0; 4096], 16_000).unwrap();
        let lm = log_mel(&clip, &FeatureConfig::default()).unwrap();
        assert!(lm.as_slice().iter().all(|&v| v == -100.0), "floor is 10*log10(1e-10)");
    }

    #[test]
    fn gain_shifts_log_mel_by_20_db() {
        // Scaling a clip by 10 adds exactly 20 dB wherever both values
        // sit above the floor.
        let base: Vec<f64> = sine_clip(500.0, 4096, 16_000)
            .samples
            .iter()
            .map(|s| s * 0.1)
            .collect();
        let quiet = AudioClip::new(base.clone(), 16_000).unwrap();
        let loud = AudioClip::new(base.iter().map(|s| s * 10.0).collect(), 16_000).unwrap();
        let cfg = FeatureConfig::default();
        let a = log_mel(&quiet, &cfg).unwrap();
        let b = log_mel(&loud, &cfg).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            if *x > -100.0 && *y > -99.0 {
                assert!((y - x - 20.0).abs() < 1e-9, "{x} -> {y}");
            }
        }
        assert_eq!(a.rows(), frame_count(4096, 1024, 512).unwrap());
    }

    #[test]
    fn stack_shapes() {
        let lm = Mat::zeros(311, 128);
        let s = stack(&lm, 5).unwrap();
        assert_eq!((s.rows(), s.cols()), (307, 640));

        let lm = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let s = stack(&lm, 1).unwrap();
        assert_eq!(s, lm);

        let s = stack(&lm, 3).unwrap();
        assert_eq!(s.rows(), 1);
        assert_eq!(s.row(0), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);

        assert!(stack(&lm, 4).is_err());
    }

    #[test]
    fn shape_chain_and_determinism() {
        let clip = sine_clip(440.0, 32_000, 16_000);
        let cfg = FeatureConfig::default();
        let a = extract_features(&clip, &meta(), &cfg).unwrap();
        let b = extract_features(&clip, &meta(), &cfg).unwrap();
        assert_eq!(a, b);
        let expected_rows = frame_count(32_000, cfg.n_fft, cfg.hop).unwrap() - cfg.stack_frames + 1;
        assert_eq!(a.vectors.rows(), expected_rows);
        assert_eq!(a.vectors.cols(), cfg.feature_dim());
        assert!(a.vectors.is_finite());
    }

    #[test]
    fn white_noise_power_scales_with_length() {
        // Total STFT power of white noise should grow roughly linearly
        // with clip length: slope within 10% averaged over seeds.
        let mut ratios = Vec::new();
        for seed in 0..10u64 {
            let mut rng = crate::rng::stream(seed, "parseval");
            let long: Vec<f64> = (0..32_768)
                .map(|_| 0.2 * crate::rng::gaussian(&mut rng))
                .collect();
            let short = long[..16_384].to_vec();
            let power = |samples: Vec<f64>| -> f64 {
                let clip = AudioClip::new(samples.iter().map(|s| s.clamp(-1.0, 1.0)).collect(), 16_000).unwrap();
                let m = stft_magnitude(&clip, 1024, 512).unwrap();
                m.as_slice().iter().map(|v| v * v).sum()
            };
            ratios.push(power(long) / power(short));
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.1, "mean ratio {mean}");
    }

    #[test]
    fn feature_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.f64");
        let m = Mat::from_rows(&[vec![1.5, -2.25, 3.0], vec![0.0, 1e-12, -7.5]]);
        write_feature_cache(&m, &path).unwrap();
        let back = read_feature_cache(&path).unwrap();
        assert_eq!(m, back);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 8 + 6 * 8);
        assert_eq!(&bytes[0..4], &2u32.to_le_bytes());
        assert_eq!(&bytes[4..8], &3u32.to_le_bytes());
    }
}
