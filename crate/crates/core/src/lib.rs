//! Desk-scale benchmark toolkit for unsupervised anomalous sound
//! detection under domain shift.
//!
//! The crate covers the full loop: synthetic domain-shifted dataset
//! generation, log-mel feature extraction, two baseline detectors
//! (reconstruction autoencoder and section classifier), gamma-percentile
//! threshold calibration, and the challenge scoring protocol (per-domain
//! AUC, per-section pAUC, harmonic-mean official score, ranking).

pub mod calibration;
pub mod dataset;
pub mod detectors;
pub mod error;
pub mod features;
pub mod mat;
pub mod metrics;
pub mod nnet;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod special;
pub mod submission;
pub mod synth;

pub use error::{Error, Result};
