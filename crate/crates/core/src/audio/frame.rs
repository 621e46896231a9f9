use serde::{Deserialize, Serialize};

use super::{AudioClip, AudioError, AudioFrame, Result};

const REFERENCE_RATE: u32 = 44_100;
const REFERENCE_WINDOW: usize = 2048;
const REFERENCE_HOP: usize = 512;

/// Window and hop lengths in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Framing {
    pub window: usize,
    pub hop: usize,
}

impl Framing {
    pub fn new(window: usize, hop: usize) -> Result<Self> {
        let framing = Self { window, hop };
        framing.validate()?;
        Ok(framing)
    }

    /// 2048/512 at 44.1 kHz, scaled proportionally for other rates.
    pub fn for_rate(sample_rate: u32) -> Self {
        let scale = |n: usize| {
            ((n as u64 * u64::from(sample_rate) + u64::from(REFERENCE_RATE) / 2) / u64::from(REFERENCE_RATE))
                as usize
        };
        Self {
            window: scale(REFERENCE_WINDOW),
            hop: scale(REFERENCE_HOP),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 64 || self.hop == 0 || self.hop > self.window {
            return Err(AudioError::InvalidFraming {
                window: self.window,
                hop: self.hop,
            });
        }
        Ok(())
    }

    /// Number of full windows that fit in `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.window {
            0
        } else {
            (len - self.window) / self.hop + 1
        }
    }

    /// Seconds between successive frames.
    pub fn hop_seconds(&self, sample_rate: u32) -> f64 {
        self.hop as f64 / f64::from(sample_rate)
    }
}

/// Cuts a clip into full windows starting every `hop` samples. The trailing
/// partial window is dropped; a clip shorter than one window yields nothing.
pub fn frame_stream(clip: &AudioClip, window: usize, hop: usize) -> Result<Vec<AudioFrame>> {
    let framing = Framing::new(window, hop)?;
    let samples = clip.samples();
    Ok((0..framing.frame_count(samples.len()))
        .map(|k| {
            let start = k * hop;
            AudioFrame::new(samples[start..start + window].to_vec(), clip.sample_rate(), start as u64)
        })
        .collect())
}

/// Incremental version of [`frame_stream`] for audio arriving in arbitrary
/// chunks. Feeding a clip through in any chunking yields exactly the frames
/// `frame_stream` would.
#[derive(Debug, Clone)]
pub struct StreamFramer {
    framing: Framing,
    sample_rate: u32,
    pending: Vec<f32>,
    /// Stream index of `pending[0]`.
    pending_start: u64,
}

impl StreamFramer {
    pub fn new(framing: Framing, sample_rate: u32) -> Result<Self> {
        framing.validate()?;
        super::check_rate(sample_rate)?;
        Ok(Self {
            framing,
            sample_rate,
            pending: Vec::with_capacity(framing.window * 2),
            pending_start: 0,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn framing(&self) -> Framing {
        self.framing
    }

    pub fn push(&mut self, chunk: &[f32]) -> Vec<AudioFrame> {
        self.pending.extend_from_slice(chunk);
        let Framing { window, hop } = self.framing;
        let mut frames = Vec::new();
        let mut offset = 0;
        while offset + window <= self.pending.len() {
            frames.push(AudioFrame::new(
                self.pending[offset..offset + window].to_vec(),
                self.sample_rate,
                self.pending_start + offset as u64,
            ));
            offset += hop;
        }
        // Keep everything from the next frame start on.
        let keep_from = offset.min(self.pending.len());
        self.pending.drain(..keep_from);
        self.pending_start += keep_from as u64;
        frames
    }
}
