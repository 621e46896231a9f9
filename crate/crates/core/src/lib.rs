//! Core engine for a voice-controlled rehabilitation game: audio I/O, pitch
//! analysis, estimator benchmarking, the game simulation and the therapy
//! session store.

pub mod audio;
pub mod bench;
pub mod game;
pub mod pitch;
pub mod store;
pub mod wire;

pub use audio::{AudioClip, AudioFrame};
pub use bench::{BenchEstimator, BenchReport};
pub use game::{ControlSample, GameState, GameStatus, LevelConfig, SessionMetrics, TelemetryTick};
pub use pitch::{Estimator, EstimatorConfig, PitchFrame};
pub use store::{Patient, SessionStore, StoreError, TherapySession, TrendSeries};
pub use wire::{TelemetryMessage, WireAudioFrame};
