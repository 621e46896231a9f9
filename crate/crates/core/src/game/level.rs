use serde::{Deserialize, Serialize};

use super::{GameError, Result};

/// Difficulty parameters for one game level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelConfig {
    /// Vertical ship speed while steering, field units per second.
    pub sensitivity: f64,
    /// Horizontal spawn jitter around x = 1.
    pub x_spread: f64,
    /// Vertical span of spawn positions, centered on y = 0.5.
    pub y_spread: f64,
    /// Leftward planet speed, field units per second.
    pub incoming_speed: f64,
    /// Continuous voicing needed before the ship responds.
    pub voice_maintenance_ms: f64,
    pub session_duration_s: f64,
    /// Pitch above which the ship climbs.
    pub pitch_threshold_mel: f64,
    pub spawn_interval_s: f64,
    pub planet_radius: f64,
    pub ship_radius: f64,
    pub rng_seed: u64,
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self {
            sensitivity: 0.25,
            x_spread: 0.1,
            y_spread: 0.8,
            incoming_speed: 0.2,
            voice_maintenance_ms: 200.0,
            session_duration_s: 60.0,
            pitch_threshold_mel: 200.0,
            spawn_interval_s: 2.0,
            planet_radius: 0.05,
            ship_radius: 0.03,
            rng_seed: 0,
        }
    }
}

impl LevelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        let checks = [
            ("sensitivity", positive(self.sensitivity)),
            ("x_spread", unit(self.x_spread)),
            ("y_spread", unit(self.y_spread)),
            ("incoming_speed", positive(self.incoming_speed)),
            (
                "voice_maintenance_ms",
                self.voice_maintenance_ms.is_finite() && self.voice_maintenance_ms >= 0.0,
            ),
            ("session_duration_s", positive(self.session_duration_s)),
            (
                "pitch_threshold_mel",
                self.pitch_threshold_mel.is_finite() && self.pitch_threshold_mel >= 0.0,
            ),
            ("spawn_interval_s", positive(self.spawn_interval_s)),
            ("planet_radius", positive(self.planet_radius)),
            ("ship_radius", positive(self.ship_radius)),
        ];
        let bad: Vec<String> = checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(name, _)| name.to_string())
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(GameError::InvalidLevel(bad))
        }
    }
}
