//! Pitch and loudness analysis: three pluggable f0 estimators, voicing,
//! loudness, Mel/MIDI scales, track smoothing and the per-frame
//! [`PitchFrame`] record.
//!
//! Every function here is pure; the only shared state is a thread-local FFT
//! plan cache.

mod analysis;
mod dsp;
mod estimators;
mod scales;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{analyze, analyze_clip, loudness_db, smooth, PitchFrame, LOUDNESS_FLOOR_DB};
pub use estimators::{estimate_acf, estimate_fft_peak, estimate_yin, ACF_MIN_CONFIDENCE};
pub use scales::{hz_to_mel, hz_to_midi, mel_to_hz, note_name, MidiNote};

use crate::audio::AudioFrame;

#[derive(Debug, Error, PartialEq)]
pub enum PitchError {
    #[error("value outside domain: {0}")]
    Domain(String),
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error("unknown estimator {0:?} (expected fft, acf or yin)")]
    UnknownEstimator(String),
}

pub type Result<T, E = PitchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub yin_threshold: f64,
    pub fft_zero_pad_factor: usize,
    pub loudness_gate_db: f64,
    /// Odd number of frames.
    pub median_window: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            f_min: 60.0,
            f_max: 1000.0,
            yin_threshold: 0.15,
            fft_zero_pad_factor: 4,
            loudness_gate_db: -45.0,
            median_window: 5,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = f64::from(sample_rate) / 2.0;
        let mut problems = Vec::new();
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max < nyquist) {
            problems.push(format!(
                "need 0 < f_min < f_max < {nyquist}, got {} / {}",
                self.f_min, self.f_max
            ));
        }
        if !(self.yin_threshold > 0.0 && self.yin_threshold < 1.0) {
            problems.push(format!("yin_threshold {} not in (0, 1)", self.yin_threshold));
        }
        if self.fft_zero_pad_factor == 0 {
            problems.push("fft_zero_pad_factor must be >= 1".into());
        }
        if self.median_window % 2 == 0 {
            problems.push(format!("median_window {} must be odd", self.median_window));
        }
        if !self.loudness_gate_db.is_finite() {
            problems.push("loudness_gate_db must be finite".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PitchError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Raw estimator output for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub f0_hz: Option<f64>,
    pub confidence: f64,
}

impl Estimate {
    pub fn unvoiced(confidence: f64) -> Self {
        Self {
            f0_hz: None,
            confidence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Fft,
    Acf,
    Yin,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Fft, Estimator::Acf, Estimator::Yin];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Fft => "fft",
            Estimator::Acf => "acf",
            Estimator::Yin => "yin",
        }
    }

    pub fn estimate(self, frame: &AudioFrame, cfg: &EstimatorConfig) -> Estimate {
        match self {
            Estimator::Fft => estimate_fft_peak(frame, cfg),
            Estimator::Acf => estimate_acf(frame, cfg),
            Estimator::Yin => estimate_yin(frame, cfg),
        }
    }
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Yin
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = PitchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fft" | "fft-peak" => Ok(Estimator::Fft),
            "acf" => Ok(Estimator::Acf),
            "yin" => Ok(Estimator::Yin),
            _ => Err(PitchError::UnknownEstimator(s.to_string())),
        }
    }
}
