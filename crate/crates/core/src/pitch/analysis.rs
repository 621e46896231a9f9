use serde::{Deserialize, Serialize};

use super::{hz_to_mel, hz_to_midi, Estimator, EstimatorConfig, Result};
use crate::audio::{frame_stream, AudioClip, AudioFrame, Framing};

pub const LOUDNESS_FLOOR_DB: f64 = -120.0;

/// One analysis row: everything the pitch monitor shows for a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchFrame {
    /// Frame start, seconds from stream start.
    pub time: f64,
    pub f0_hz: Option<f64>,
    pub pitch_mel: Option<f64>,
    pub midi_note_number: Option<i32>,
    pub midi_note_name: Option<String>,
    pub cents_offset: Option<f64>,
    pub loudness_db: f64,
    pub voiced: bool,
    pub confidence: f64,
    pub sample_index: u64,
    pub frame_duration: f64,
}

impl PitchFrame {
    /// Sets f0 and every field derived from it, or clears them all.
    fn set_f0(&mut self, f0_hz: Option<f64>) {
        let derived = f0_hz.and_then(|f| Some((f, hz_to_mel(f).ok()?, hz_to_midi(f).ok()?)));
        match derived {
            Some((f, mel, midi)) => {
                self.f0_hz = Some(f);
                self.pitch_mel = Some(mel);
                self.midi_note_number = Some(midi.number);
                self.midi_note_name = Some(midi.name);
                self.cents_offset = Some(midi.cents);
                self.voiced = true;
            }
            None => {
                self.f0_hz = None;
                self.pitch_mel = None;
                self.midi_note_number = None;
                self.midi_note_name = None;
                self.cents_offset = None;
                self.voiced = false;
            }
        }
    }
}

/// 20·log10(RMS) in dBFS, floored at -120.
pub fn loudness_db(frame: &AudioFrame) -> f64 {
    if frame.is_empty() {
        return LOUDNESS_FLOOR_DB;
    }
    let mean_square =
        frame.samples.iter().map(|&s| f64::from(s) * f64::from(s)).sum::<f64>() / frame.len() as f64;
    if mean_square <= 0.0 {
        return LOUDNESS_FLOOR_DB;
    }
    (10.0 * mean_square.log10()).max(LOUDNESS_FLOOR_DB)
}

/// Runs one estimator on a frame and applies the loudness gate. A frame is
/// voiced only when the estimator found a pitch and the frame is louder than
/// `loudness_gate_db`.
pub fn analyze(frame: &AudioFrame, cfg: &EstimatorConfig, estimator: Estimator) -> PitchFrame {
    let loudness = loudness_db(frame);
    let estimate = estimator.estimate(frame, cfg);
    let mut out = PitchFrame {
        time: frame.start_time,
        f0_hz: None,
        pitch_mel: None,
        midi_note_number: None,
        midi_note_name: None,
        cents_offset: None,
        loudness_db: loudness,
        voiced: false,
        confidence: estimate.confidence,
        sample_index: frame.start_sample,
        frame_duration: frame.duration(),
    };
    if loudness > cfg.loudness_gate_db {
        out.set_f0(estimate.f0_hz);
    }
    out
}

/// Analyzes a whole clip frame by frame.
pub fn analyze_clip(
    clip: &AudioClip,
    framing: Framing,
    cfg: &EstimatorConfig,
    estimator: Estimator,
) -> Result<Vec<PitchFrame>> {
    cfg.validate(clip.sample_rate())?;
    let frames = frame_stream(clip, framing.window, framing.hop)
        .map_err(|e| super::PitchError::InvalidConfig(e.to_string()))?;
    Ok(frames.iter().map(|f| analyze(f, cfg, estimator)).collect())
}

/// Centered median filter over the voiced frames of a track. Unvoiced frames
/// are left alone and never contribute to a neighbour's median.
pub fn smooth(track: &[PitchFrame], cfg: &EstimatorConfig) -> Vec<PitchFrame> {
    let half = cfg.median_window / 2;
    track
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            if !frame.voiced {
                return frame.clone();
            }
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(track.len() - 1);
            let mut values: Vec<f64> = track[lo..=hi].iter().filter_map(|f| f.f0_hz).collect();
            values.sort_by(f64::total_cmp);
            let mid = values.len() / 2;
            let median = if values.len() % 2 == 1 {
                values[mid]
            } else {
                0.5 * (values[mid - 1] + values[mid])
            };
            let mut out = frame.clone();
            out.set_f0(Some(median));
            out
        })
        .collect()
}
