use serde::{Deserialize, Serialize};

use super::{GameError, Result, TelemetryTick};

/// Clinical factors derived from one session's telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub phonation_time_ms: f64,
    pub pitch_change_mel: f64,
    pub duration_s: f64,
    /// Delay from session start to the first voiced tick.
    pub reaction_time_ms: Option<f64>,
    pub score: u32,
    pub mean_pitch_mel: Option<f64>,
}

pub const METRIC_NAMES: [&str; 6] = [
    "phonation_time_ms",
    "pitch_change_mel",
    "duration_s",
    "reaction_time_ms",
    "score",
    "mean_pitch_mel",
];

impl SessionMetrics {
    /// Looks a metric up by name; `None` for unknown names or absent values.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "phonation_time_ms" => Some(self.phonation_time_ms),
            "pitch_change_mel" => Some(self.pitch_change_mel),
            "duration_s" => Some(self.duration_s),
            "reaction_time_ms" => self.reaction_time_ms,
            "score" => Some(self.score as f64),
            "mean_pitch_mel" => self.mean_pitch_mel,
            _ => None,
        }
    }
}

pub fn session_metrics(telemetry: &[TelemetryTick]) -> Result<SessionMetrics> {
    let last = telemetry.last().ok_or(GameError::EmptyTelemetry)?;
    let mut voiced_us = 0u64;
    let mut first_voiced_us = None;
    let mut pitches = Vec::new();
    for t in telemetry {
        if let Some(mel) = t.control.pitch_mel.filter(|_| t.control.voiced) {
            voiced_us += t.dt_us;
            first_voiced_us.get_or_insert(t.time_us - t.dt_us);
            pitches.push(mel);
        }
    }
    let (lo, hi) = pitches
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let pitch_change_mel = if pitches.len() < 2 { 0.0 } else { hi - lo };
    let mean_pitch_mel = (!pitches.is_empty()).then(|| pitches.iter().sum::<f64>() / pitches.len() as f64);
    Ok(SessionMetrics {
        phonation_time_ms: voiced_us as f64 / 1e3,
        pitch_change_mel,
        duration_s: last.time_us as f64 / 1e6,
        reaction_time_ms: first_voiced_us.map(|us| us as f64 / 1e3),
        score: last.state.score,
        mean_pitch_mel,
    })
}
