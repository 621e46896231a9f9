//! Audio acquisition and storage: clips, analysis frames, WAV I/O, the live
//! capture ring and the synthetic tone generator used as ground truth.

mod frame;
mod ring;
mod synth;
mod wav;

pub use frame::{frame_stream, Framing, StreamFramer};
pub use ring::AudioRing;
pub use synth::{synth_tone, white_noise, ToneSpec, Trajectory};
pub use wav::{read_wav, write_wav};

use thiserror::Error;

/// Sample rates accepted anywhere in the pipeline. No resampling is done.
pub const SUPPORTED_RATES: [u32; 3] = [16_000, 44_100, 48_000];

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV data: {0}")]
    Format(String),
    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),
    #[error("unsupported sample rate {0} Hz (expected one of 16000, 44100, 48000)")]
    UnsupportedRate(u32),
    #[error("clip has no samples")]
    Empty,
    #[error("sample {index} out of range: {value}")]
    SampleOutOfRange { index: usize, value: f32 },
    #[error("invalid framing: window {window}, hop {hop}")]
    InvalidFraming { window: usize, hop: usize },
    #[error("invalid tone spec: {0}")]
    InvalidTone(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AudioError> = std::result::Result<T, E>;

pub fn check_rate(sample_rate: u32) -> Result<()> {
    if SUPPORTED_RATES.contains(&sample_rate) {
        Ok(())
    } else {
        Err(AudioError::UnsupportedRate(sample_rate))
    }
}

/// A whole mono recording, normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
    pub source_label: String,
}

impl AudioClip {
    /// Builds a clip, checking the rate and the sample range. An empty clip is
    /// allowed in memory but cannot be written to disk.
    pub fn new(samples: Vec<f32>, sample_rate: u32, source_label: impl Into<String>) -> Result<Self> {
        check_rate(sample_rate)?;
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(-1.0..=1.0).contains(*s))
        {
            return Err(AudioError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            samples,
            sample_rate,
            source_label: source_label.into(),
        })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }
}

/// One fixed-length analysis window cut from a clip or a live stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFrame {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    /// Index of the first sample relative to the start of the stream.
    pub start_sample: u64,
    /// Seconds from the start of the stream.
    pub start_time: f64,
}

impl AudioFrame {
    pub fn new(samples: Vec<f32>, sample_rate: u32, start_sample: u64) -> Self {
        Self {
            start_time: start_sample as f64 / f64::from(sample_rate),
            samples,
            sample_rate,
            start_sample,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Copy of this frame with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f32) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            ..self.clone()
        }
    }
}
