use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{seconds_to_us, ControlSample, GameError, LevelConfig, Result};

/// Fixed horizontal position of the ship.
pub const SHIP_X: f64 = 0.1;
const SHIP_START_Y: f64 = 0.5;
const MAX_DT_US: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStatus {
    Running,
    GameOver,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Planet {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub tick: u64,
    pub time_us: u64,
    pub ship_y: f64,
    pub planets: Vec<Planet>,
    /// Planets that left the field past the ship.
    pub score: u32,
    pub status: GameStatus,
    pub voiced_streak_us: u64,
    pub planets_spawned: u64,
    pub planets_collided: u64,
    next_spawn_us: u64,
    rng: ChaCha8Rng,
}

/// What a client needs to draw one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub tick: u64,
    pub time: f64,
    pub ship_y: f64,
    pub velocity: f64,
    pub planets: Vec<Planet>,
    pub score: u32,
    pub status: GameStatus,
    pub voiced_streak_ms: f64,
}

pub fn new_session(level: &LevelConfig) -> Result<GameState> {
    level.validate()?;
    Ok(GameState {
        tick: 0,
        time_us: 0,
        ship_y: SHIP_START_Y,
        planets: Vec::new(),
        score: 0,
        status: GameStatus::Running,
        voiced_streak_us: 0,
        planets_spawned: 0,
        planets_collided: 0,
        next_spawn_us: seconds_to_us(level.spawn_interval_s),
        rng: ChaCha8Rng::seed_from_u64(level.rng_seed),
    })
}

/// Vertical ship velocity for one control sample. The ship climbs when the
/// pitch is strictly above the threshold and sinks otherwise, but only once
/// the voice has been held for `voice_maintenance_ms`; unvoiced input leaves
/// it in place.
pub fn control_velocity(sample: &ControlSample, voiced_streak_ms: f64, level: &LevelConfig) -> f64 {
    match sample.pitch_mel {
        Some(mel) if sample.voiced && voiced_streak_ms >= level.voice_maintenance_ms => {
            if mel > level.pitch_threshold_mel {
                level.sensitivity
            } else {
                -level.sensitivity
            }
        }
        _ => 0.0,
    }
}

/// Functional form of [`GameState::step`].
pub fn tick(state: &GameState, sample: &ControlSample, dt: f64, level: &LevelConfig) -> Result<GameState> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(GameError::InvalidDt(dt));
    }
    let mut next = state.clone();
    next.step(sample, seconds_to_us(dt), level)?;
    Ok(next)
}

impl GameState {
    pub fn time(&self) -> f64 {
        self.time_us as f64 / 1e6
    }

    pub fn voiced_streak_ms(&self) -> f64 {
        self.voiced_streak_us as f64 / 1e3
    }

    pub fn is_running(&self) -> bool {
        self.status == GameStatus::Running
    }

    pub fn summary(&self, level: &LevelConfig, sample: &ControlSample) -> GameSummary {
        GameSummary {
            tick: self.tick,
            time: self.time(),
            ship_y: self.ship_y,
            velocity: control_velocity(sample, self.voiced_streak_ms(), level),
            planets: self.planets.clone(),
            score: self.score,
            status: self.status,
            voiced_streak_ms: self.voiced_streak_ms(),
        }
    }

    /// Puts a planet on the field outside the spawn schedule. Counts as a
    /// spawn for the planet bookkeeping.
    pub fn place_planet(&mut self, x: f64, y: f64, radius: f64) {
        self.planets.push(Planet {
            id: self.planets_spawned,
            x,
            y,
            radius,
        });
        self.planets_spawned += 1;
    }

    /// Advances the game by `dt_us` microseconds under one control sample.
    pub fn step(&mut self, sample: &ControlSample, dt_us: u64, level: &LevelConfig) -> Result<()> {
        if self.status != GameStatus::Running {
            return Err(GameError::NotRunning(self.status));
        }
        if dt_us == 0 || dt_us > MAX_DT_US {
            return Err(GameError::InvalidDt(dt_us as f64 / 1e6));
        }
        let dt = dt_us as f64 / 1e6;

        self.voiced_streak_us = if sample.voiced { self.voiced_streak_us + dt_us } else { 0 };

        let velocity = control_velocity(sample, self.voiced_streak_ms(), level);
        self.ship_y = (self.ship_y + velocity * dt).clamp(0.0, 1.0);

        for p in &mut self.planets {
            p.x -= level.incoming_speed * dt;
        }
        let before = self.planets.len();
        self.planets.retain(|p| p.x >= 0.0);
        self.score += (before - self.planets.len()) as u32;

        self.tick += 1;
        self.time_us += dt_us;

        let interval_us = seconds_to_us(level.spawn_interval_s).max(1);
        while self.time_us >= self.next_spawn_us {
            let jitter_x: f64 = self.rng.gen();
            let jitter_y: f64 = self.rng.gen();
            let x = 1.0 + level.x_spread * (2.0 * jitter_x - 1.0);
            let y = 0.5 + 0.5 * level.y_spread * (2.0 * jitter_y - 1.0);
            self.place_planet(x, y, level.planet_radius);
            self.next_spawn_us += interval_us;
        }

        let ship_y = self.ship_y;
        let reach = |p: &Planet| level.ship_radius + p.radius;
        let before = self.planets.len();
        self.planets
            .retain(|p| (p.x - SHIP_X).hypot(p.y - ship_y) >= reach(p));
        let hit = before - self.planets.len();
        if hit > 0 {
            self.planets_collided += hit as u64;
            self.status = GameStatus::GameOver;
        } else if self.time_us >= seconds_to_us(level.session_duration_s) {
            self.status = GameStatus::Completed;
        }
        Ok(())
    }
}
