//! Gamma-distribution threshold calibration and the normal/anomaly
//! decision rule.
//!
//! Anomaly scores of normal training clips are fitted with a maximum-
//! likelihood gamma distribution; the decision threshold sits at a fixed
//! percentile (0.9 by default) of the fitted distribution. Exactly one
//! threshold exists per (machine, section), covering both domains.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dataset::{load_wav, DatasetIndex, Domain, Split};
use crate::detectors::Scorer;
use crate::error::{Error, Result};
use crate::special::{digamma, reg_lower_gamma, trigamma};

/// Shape/scale parameters of a fitted gamma distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shape.is_finite() && self.shape > 0.0) {
            return Err(Error::NumericDomain(format!("shape {} not positive", self.shape)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::NumericDomain(format!("scale {} not positive", self.scale)));
        }
        Ok(())
    }
}

/// Per-(machine, section) decision threshold in raw score units.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub machine: String,
    pub section: u8,
    pub percentile: f64,
    pub fitted: GammaParams,
    /// Offset added to scores before fitting when some were non-positive
    /// (classifier log-odds can be negative); zero otherwise.
    pub shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Decision {
    Normal,
    Anomaly,
}

impl Decision {
    pub fn as_bit(self) -> u8 {
        match self {
            Decision::Normal => 0,
            Decision::Anomaly => 1,
        }
    }
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_REL_TOL: f64 = 1e-10;

/// Maximum-likelihood gamma fit over strictly positive scores.
///
/// The shape solves `ln k - psi(k) = ln(mean) - mean(ln x)` by Newton
/// iteration from the method-of-moments start `mean^2 / variance`, with a
/// bisection fallback if an iterate leaves (0, inf). Scale is `mean / k`.
pub fn gamma_fit(scores: &[f64]) -> Result<GammaParams> {
    if scores.len() < 2 {
        return Err(Error::Degenerate(format!(
            "gamma fit needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NumericDomain(format!("non-finite score {bad}")));
    }
    if let Some(bad) = scores.iter().find(|s| **s <= 0.0) {
        return Err(Error::NumericDomain(format!(
            "gamma support is positive; got score {bad} (shift scores first)"
        )));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let mean_ln = scores.iter().map(|s| s.ln()).sum::<f64>() / n;
    let variance = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    if variance == 0.0 {
        return Err(Error::Degenerate("constant scores: zero variance".into()));
    }
    let target = mean.ln() - mean_ln; // strictly positive by Jensen unless degenerate
    if !(target > 0.0) {
        return Err(Error::Degenerate(format!(
            "log-moment gap {target} not positive; scores too close to constant"
        )));
    }

    // f(k) = ln k - psi(k) - target is strictly decreasing with a unique root.
    let f = |k: f64| k.ln() - digamma(k) - target;
    let mut k = (mean * mean / variance).max(1e-8);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let step = f(k) / (1.0 / k - trigamma(k));
        let next = k - step;
        if !(next.is_finite() && next > 0.0) {
            // Newton escaped the domain; fall back to bisection.
            k = bisect_shape(&f, k);
            converged = true;
            break;
        }
        let delta = (next - k).abs();
        k = next;
        if delta < NEWTON_REL_TOL * k {
            converged = true;
            break;
        }
    }
    if !converged {
        // Newton exhausted its budget; refine with bisection.
        k = bisect_shape(&f, k);
    }
    let params = GammaParams {
        shape: k,
        scale: mean / k,
    };
    params.validate()?;
    Ok(params)
}

fn bisect_shape(f: &dyn Fn(f64) -> f64, start: f64) -> f64 {
    // f is decreasing: f > 0 left of the root, f < 0 right of it.
    let mut lo = start.max(1e-12);
    let mut hi = lo;
    while f(lo) < 0.0 && lo > 1e-300 {
        lo /= 2.0;
    }
    while f(hi) > 0.0 && hi < 1e300 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gamma CDF at `x`.
pub fn gamma_cdf(params: GammaParams, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        reg_lower_gamma(params.shape, x / params.scale)
    }
}

const QUANTILE_TOL: f64 = 1e-12;

/// Gamma quantile: the value v with `P(shape, v/scale) = q`.
///
/// Bisection on the scale-free variable to absolute tolerance 1e-12,
/// then multiplied back by the scale.
pub fn gamma_quantile(params: GammaParams, q: f64) -> Result<f64> {
    params.validate()?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Input(format!("quantile order {q} outside (0, 1)")));
    }
    let cdf = |x: f64| reg_lower_gamma(params.shape, x);
    let mut lo = 0.0;
    let mut hi = params.shape.max(1.0);
    while cdf(hi) < q {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NumericDomain(format!(
                "quantile bracket failed for shape {} at q {q}",
                params.shape
            )));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi || hi - lo < QUANTILE_TOL {
            break;
        }
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) * params.scale)
}

/// Collects anomaly scores of all train-split normal clips for one
/// (machine, section), both domains pooled.
pub fn collect_training_scores(
    detector: &dyn Scorer,
    index: &DatasetIndex,
    machine: &str,
    section: u8,
) -> Result<Vec<f64>> {
    let clips = index.select(machine, section, Some(Split::Train), None);
    if clips.is_empty() {
        return Err(Error::Data(format!(
            "no training clips for machine {machine} section {section}"
        )));
    }
    if !clips.iter().any(|(_, m)| m.domain == Domain::Source) {
        return Err(Error::Data(format!(
            "no source-domain training clips for machine {machine} section {section}"
        )));
    }
    let mut scores = Vec::with_capacity(clips.len());
    for (path, meta) in clips {
        let clip = load_wav(path)?;
        scores.push(detector.score(&clip, meta)?);
    }
    Ok(scores)
}

/// Fits the gamma threshold for one (machine, section) over pooled
/// source+target training normals.
pub fn calibrate(
    detector: &dyn Scorer,
    index: &DatasetIndex,
    machine: &str,
    section: u8,
    percentile: f64,
) -> Result<Threshold> {
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::Input(format!("percentile {percentile} outside (0, 1)")));
    }
    let scores = collect_training_scores(detector, index, machine, section)?;
    calibrate_from_scores(&scores, machine, section, percentile)
}

/// Threshold fit from raw scores. Non-positive score sets are shifted by
/// `-min + 1e-6` before fitting, and the threshold is mapped back to raw
/// score units.
pub fn calibrate_from_scores(
    scores: &[f64],
    machine: &str,
    section: u8,
    percentile: f64,
) -> Result<Threshold> {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min <= 0.0 { -min + 1e-6 } else { 0.0 };
    let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
    let fitted = gamma_fit(&shifted)?;
    let value = gamma_quantile(fitted, percentile)? - shift;
    Ok(Threshold {
        value,
        machine: machine.to_string(),
        section,
        percentile,
        fitted,
        shift,
    })
}

/// The decision rule: anomalous iff the score strictly exceeds the
/// threshold; equality stays normal.
pub fn decide(score: f64, threshold: &Threshold) -> Decision {
    if score > threshold.value {
        Decision::Anomaly
    } else {
        Decision::Normal
    }
}

/// Writes thresholds as CSV: `machine,section,shape,scale,percentile,phi`.
pub fn write_thresholds(thresholds: &[Threshold], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("machine,section,shape,scale,percentile,phi\n");
    for t in thresholds {
        out.push_str(&format!(
            "{},{},{:.9e},{:.9e},{},{:.9e}\n",
            t.machine, t.section, t.fitted.shape, t.fitted.scale, t.percentile, t.value
        ));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}
