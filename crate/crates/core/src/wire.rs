//! Messages exchanged on the live stream: binary audio frames from the
//! client, JSON telemetry back.
//!
//! Audio frame layout, all little-endian:
//!
//! ```text
//! 0   4  magic "VXA1"
//! 4   4  sample_rate   u32
//! 8   4  sample_count  u32
//! 12  8  timestamp_us  u64
//! 20  .. sample_count x f32
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameStatus, GameSummary, SessionMetrics};
use crate::pitch::PitchFrame;

pub const MAGIC: [u8; 4] = *b"VXA1";
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("frame is {0} bytes, shorter than the header")]
    TooShort(usize),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("declared {declared} samples but payload holds {actual} bytes")]
    LengthMismatch { declared: u32, actual: usize },
    #[error("sample {index} is {value}, outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireAudioFrame {
    pub sample_rate: u32,
    pub timestamp_us: u64,
    pub samples: Vec<f32>,
}

impl WireAudioFrame {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.samples.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&(self.samples.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.timestamp_us.to_le_bytes());
        for s in &self.samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    /// Parses one frame. The rate is not checked here; the receiver decides
    /// which rates it accepts.
    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::TooShort(bytes.len()));
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        let sample_rate = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let declared = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let timestamp_us = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let payload = &bytes[HEADER_LEN..];
        if payload.len() as u64 != declared as u64 * 4 {
            return Err(WireError::LengthMismatch {
                declared,
                actual: payload.len(),
            });
        }
        let samples: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, s)| !(-1.0..=1.0).contains(*s)) {
            return Err(WireError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            sample_rate,
            timestamp_us,
            samples,
        })
    }
}

/// One text message on the live stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryMessage {
    /// Game tick this message belongs to. A pitch message and the state it
    /// produced share a tick.
    pub tick: u64,
    #[serde(flatten)]
    pub body: TelemetryBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum TelemetryBody {
    Pitch(PitchFrame),
    State(GameSummary),
    SessionEnd(SessionEnd),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEnd {
    pub status: GameStatus,
    /// Id of the saved therapy record.
    pub therapy_id: String,
    pub metrics: SessionMetrics,
}

impl TelemetryMessage {
    pub fn kind(&self) -> &'static str {
        match self.body {
            TelemetryBody::Pitch(_) => "pitch",
            TelemetryBody::State(_) => "state",
            TelemetryBody::SessionEnd(_) => "session_end",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_exact() {
        let frame = WireAudioFrame {
            sample_rate: 16_000,
            timestamp_us: 0x0102_0304_0506_0708,
            samples: vec![0.5, -1.0],
        };
        let bytes = frame.encode();
        let mut expected = b"VXA1".to_vec();
        expected.extend_from_slice(&[0x80, 0x3e, 0, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0]);
        expected.extend_from_slice(&[8, 7, 6, 5, 4, 3, 2, 1]);
        expected.extend_from_slice(&[0, 0, 0, 0x3f]);
        expected.extend_from_slice(&[0, 0, 0x80, 0xbf]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn rejects_violations() {
        let good = WireAudioFrame {
            sample_rate: 44_100,
            timestamp_us: 0,
            samples: vec![0.0; 8],
        }
        .encode();
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(WireAudioFrame::decode(&magic), Err(WireError::BadMagic(_))));
        assert!(matches!(
            WireAudioFrame::decode(&good[..good.len() - 1]),
            Err(WireError::LengthMismatch { declared: 8, actual: 31 })
        ));
        assert_eq!(WireAudioFrame::decode(&good[..10]), Err(WireError::TooShort(10)));
        let loud = WireAudioFrame {
            sample_rate: 44_100,
            timestamp_us: 0,
            samples: vec![0.0, 1.5],
        }
        .encode();
        assert!(matches!(
            WireAudioFrame::decode(&loud),
            Err(WireError::SampleOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn telemetry_shape() {
        let msg = TelemetryMessage {
            tick: 3,
            body: TelemetryBody::SessionEnd(SessionEnd {
                status: GameStatus::Completed,
                therapy_id: "t".into(),
                metrics: SessionMetrics {
                    phonation_time_ms: 1.0,
                    pitch_change_mel: 0.0,
                    duration_s: 2.0,
                    reaction_time_ms: None,
                    score: 0,
                    mean_pitch_mel: None,
                },
            }),
        };
        let v: serde_json::Value = serde_json::to_value(&msg).unwrap();
        assert_eq!(v["kind"], "session_end");
        assert_eq!(v["tick"], 3);
        assert_eq!(v["payload"]["status"], "completed");
        let back: TelemetryMessage = serde_json::from_value(v).unwrap();
        assert_eq!(back, msg);
        assert_eq!(back.kind(), "session_end");
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(
            rate in any::<u32>(),
            ts in any::<u64>(),
            samples in proptest::collection::vec(-1.0f32..=1.0, 0..300),
        ) {
            let frame = WireAudioFrame { sample_rate: rate, timestamp_us: ts, samples };
            let bytes = frame.encode();
            prop_assert_eq!(bytes.len(), HEADER_LEN + 4 * frame.samples.len());
            prop_assert_eq!(WireAudioFrame::decode(&bytes).unwrap(), frame);
        }

        #[test]
        fn truncation_never_decodes(samples in proptest::collection::vec(-1.0f32..=1.0, 1..50), cut in 1usize..4) {
            let bytes = WireAudioFrame { sample_rate: 16_000, timestamp_us: 1, samples }.encode();
            prop_assert!(WireAudioFrame::decode(&bytes[..bytes.len() - cut]).is_err());
        }
    }
}
