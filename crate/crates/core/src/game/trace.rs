use serde::{Deserialize, Serialize};

use super::state::{new_session, GameState, GameSummary};
use super::{seconds_to_us, ControlSample, GameError, LevelConfig, Result};

/// One line of a control trace file: a sample that holds from `time` until
/// the next sample's time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedControl {
    pub time: f64,
    #[serde(flatten)]
    pub sample: ControlSample,
}

/// Everything needed to replay or score one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryTick {
    /// Game time after the tick.
    pub time_us: u64,
    pub dt_us: u64,
    pub control: ControlSample,
    pub state: GameSummary,
}

impl TelemetryTick {
    pub fn time(&self) -> f64 {
        self.time_us as f64 / 1e6
    }
}

#[derive(Debug, Clone)]
pub struct GameSession {
    pub level: LevelConfig,
    pub state: GameState,
    pub telemetry: Vec<TelemetryTick>,
}

impl GameSession {
    pub fn new(level: LevelConfig) -> Result<Self> {
        let state = new_session(&level)?;
        Ok(Self {
            level,
            state,
            telemetry: Vec::new(),
        })
    }

    pub fn step(&mut self, sample: ControlSample, dt_us: u64) -> Result<&TelemetryTick> {
        self.state.step(&sample, dt_us, &self.level)?;
        self.telemetry.push(TelemetryTick {
            time_us: self.state.time_us,
            dt_us,
            control: sample,
            state: self.state.summary(&self.level, &sample),
        });
        Ok(self.telemetry.last().expect("just pushed"))
    }

    pub fn score(&self) -> u32 {
        self.state.score
    }
}

/// Folds explicit (dt, sample) ticks until they run out or the game ends.
pub fn run_ticks<I>(level: &LevelConfig, ticks: I) -> Result<GameSession>
where
    I: IntoIterator<Item = (u64, ControlSample)>,
{
    let mut session = GameSession::new(level.clone())?;
    for (dt_us, sample) in ticks {
        if !session.state.is_running() {
            break;
        }
        session.step(sample, dt_us)?;
    }
    Ok(session)
}

/// Runs a timed control trace. Each sample lasts until the next one starts;
/// the last sample reuses the previous interval. Samples left over after the
/// game ends are ignored.
pub fn run_trace(level: &LevelConfig, samples: &[TimedControl]) -> Result<GameSession> {
    if samples.len() < 2 {
        return Err(GameError::InvalidTrace("need at least two samples".into()));
    }
    let mut times = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        if !s.time.is_finite() || s.time < 0.0 {
            return Err(GameError::InvalidTrace(format!("sample {i}: bad time {}", s.time)));
        }
        let t = seconds_to_us(s.time);
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(GameError::InvalidTrace(format!("sample {i}: time not increasing")));
            }
        }
        times.push(t);
    }
    let dts: Vec<u64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let last_dt = *dts.last().expect("n >= 2");
    let ticks = samples
        .iter()
        .zip(dts.into_iter().chain(std::iter::once(last_dt)))
        .map(|(s, dt)| (dt, s.sample));
    run_ticks(level, ticks)
}
