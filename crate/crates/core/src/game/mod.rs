//! Deterministic simulation of the voice-controlled space flight game.
//!
//! The field is the unit square. The ship sits at x = 0.1 and moves only
//! vertically; planets enter from the right and drift left. Game time is
//! kept in whole microseconds so that replays and metrics are exact.

mod level;
mod metrics;
mod state;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use level::LevelConfig;
pub use metrics::{session_metrics, SessionMetrics, METRIC_NAMES};
pub use state::{control_velocity, new_session, tick, GameState, GameStatus, GameSummary, Planet, SHIP_X};
pub use trace::{run_ticks, run_trace, GameSession, TelemetryTick, TimedControl};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("invalid level, offending fields: {}", .0.join(", "))]
    InvalidLevel(Vec<String>),
    #[error("tick on a session that is {0:?}")]
    NotRunning(GameStatus),
    #[error("tick length {0} s outside (0, 0.1]")]
    InvalidDt(f64),
    #[error("invalid control trace: {0}")]
    InvalidTrace(String),
    #[error("telemetry is empty")]
    EmptyTelemetry,
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;

/// The control-relevant part of one analysis frame. Loudness is deliberately
/// not part of it: only pitch steers the ship.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawControl")]
pub struct ControlSample {
    pub voiced: bool,
    pub pitch_mel: Option<f64>,
}

#[derive(Deserialize)]
struct RawControl {
    voiced: bool,
    #[serde(default)]
    pitch_mel: Option<f64>,
}

impl TryFrom<RawControl> for ControlSample {
    type Error = String;

    fn try_from(raw: RawControl) -> std::result::Result<Self, Self::Error> {
        match (raw.voiced, raw.pitch_mel) {
            (true, Some(mel)) if mel.is_finite() => Ok(ControlSample::voiced(mel)),
            (false, None) => Ok(ControlSample::UNVOICED),
            (true, _) => Err("voiced sample needs a finite pitch_mel".into()),
            (false, Some(_)) => Err("unvoiced sample must not carry pitch_mel".into()),
        }
    }
}

impl ControlSample {
    pub const UNVOICED: ControlSample = ControlSample {
        voiced: false,
        pitch_mel: None,
    };

    pub fn voiced(pitch_mel: f64) -> Self {
        Self {
            voiced: true,
            pitch_mel: Some(pitch_mel),
        }
    }

    pub fn from_pitch(frame: &crate::pitch::PitchFrame) -> Self {
        match frame.pitch_mel {
            Some(mel) if frame.voiced => Self::voiced(mel),
            _ => Self::UNVOICED,
        }
    }
}

pub(crate) fn seconds_to_us(seconds: f64) -> u64 {
    (seconds * 1e6).round().max(0.0) as u64
}
