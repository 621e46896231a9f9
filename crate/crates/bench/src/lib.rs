//! Shared inputs for the benchmarks.

use vocalplay_core::audio::{frame_stream, synth_tone, Framing, ToneSpec, Trajectory};
use vocalplay_core::game::{ControlSample, TimedControl};
use vocalplay_core::AudioFrame;

pub const RATE: u32 = 44_100;

/// Interior analysis frames of a one second tone with three partials.
pub fn tone_frames(hz: f64) -> Vec<AudioFrame> {
    let spec = ToneSpec {
        f0: Trajectory::constant(hz).expect("valid frequency"),
        amplitude: 0.5,
        duration: 1.0,
        snr_db: 30.0,
        harmonics: 3,
        noise_seed: 1,
    };
    let clip = synth_tone(&spec, RATE).expect("valid tone");
    let framing = Framing::for_rate(RATE);
    let mut frames = frame_stream(&clip, framing.window, framing.hop).expect("valid framing");
    frames.truncate(frames.len() - 1);
    frames.remove(0);
    frames
}

/// A control trace at the live tick rate that alternates sung phrases and
/// pauses.
pub fn phrase_trace(seconds: f64) -> Vec<TimedControl> {
    let dt = Framing::for_rate(RATE).hop_seconds(RATE);
    let n = (seconds / dt).ceil() as usize + 1;
    (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            let sample = if t % 3.0 < 0.5 {
                ControlSample::UNVOICED
            } else {
                ControlSample::voiced(200.0 + 50.0 * (t * 0.9).sin())
            };
            TimedControl { time: t, sample }
        })
        .collect()
}
