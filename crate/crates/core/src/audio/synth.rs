use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_rate, AudioClip, AudioError, Result};

const F0_RANGE: std::ops::RangeInclusive<f64> = 30.0..=2000.0;

/// Piecewise-linear fundamental frequency over time, as `(seconds, Hz)`
/// breakpoints. Held constant before the first and after the last point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(AudioError::InvalidTone("empty trajectory".into()));
        }
        if points.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(AudioError::InvalidTone("trajectory times must be non-decreasing".into()));
        }
        if let Some(&(_, f)) = points.iter().find(|(_, f)| !F0_RANGE.contains(f)) {
            return Err(AudioError::InvalidTone(format!("f0 {f} Hz outside [30, 2000]")));
        }
        Ok(Self { points })
    }

    pub fn constant(hz: f64) -> Result<Self> {
        Self::new(vec![(0.0, hz)])
    }

    pub fn glide(from_hz: f64, to_hz: f64, duration: f64) -> Result<Self> {
        Self::new(vec![(0.0, from_hz), (duration, to_hz)])
    }

    /// Sinusoidal vibrato around `center_hz`, approximated by breakpoints
    /// every `step` seconds.
    pub fn vibrato(center_hz: f64, depth: f64, rate_hz: f64, duration: f64, step: f64) -> Result<Self> {
        let n = (duration / step).ceil() as usize;
        Self::new(
            (0..=n)
                .map(|i| {
                    let t = i as f64 * step;
                    (t, center_hz * (1.0 + depth * (TAU * rate_hz * t).sin()))
                })
                .collect(),
        )
    }

    pub fn at(&self, t: f64) -> f64 {
        let first = self.points[0];
        if t <= first.0 {
            return first.1;
        }
        // First breakpoint strictly after t.
        let idx = self.points.partition_point(|&(pt, _)| pt <= t);
        if idx == self.points.len() {
            return self.points[idx - 1].1;
        }
        let (t0, f0) = self.points[idx - 1];
        let (t1, f1) = self.points[idx];
        if t1 == t0 {
            f1
        } else {
            f0 + (f1 - f0) * (t - t0) / (t1 - t0)
        }
    }

    /// Mean value over `[t0, t1]`, by trapezoid sampling.
    pub fn mean_over(&self, t0: f64, t1: f64) -> f64 {
        const STEPS: usize = 64;
        let h = (t1 - t0) / STEPS as f64;
        let inner: f64 = (1..STEPS).map(|i| self.at(t0 + i as f64 * h)).sum();
        (inner + 0.5 * (self.at(t0) + self.at(t1))) / STEPS as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToneSpec {
    pub f0: Trajectory,
    /// Peak amplitude of the clean harmonic sum, in [0, 1].
    pub amplitude: f64,
    pub duration: f64,
    /// Signal-to-noise ratio of added white noise; `f64::INFINITY` is clean.
    pub snr_db: f64,
    /// Number of partials, the n-th at amplitude 1/n.
    pub harmonics: u32,
    pub noise_seed: u64,
}

impl ToneSpec {
    /// Clean single-harmonic tone.
    pub fn sine(hz: f64, amplitude: f64, duration: f64) -> Result<Self> {
        Ok(Self {
            f0: Trajectory::constant(hz)?,
            amplitude,
            duration,
            snr_db: f64::INFINITY,
            harmonics: 1,
            noise_seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(AudioError::InvalidTone(format!("duration {}", self.duration)));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(AudioError::InvalidTone(format!("amplitude {}", self.amplitude)));
        }
        if self.harmonics == 0 {
            return Err(AudioError::InvalidTone("at least one harmonic".into()));
        }
        if self.snr_db.is_nan() {
            return Err(AudioError::InvalidTone("snr is NaN".into()));
        }
        Ok(())
    }
}

/// Renders a phase-continuous harmonic tone following the f0 trajectory, with
/// optional white noise at the requested SNR. Samples are clipped to [-1, 1].
pub fn synth_tone(spec: &ToneSpec, sample_rate: u32) -> Result<AudioClip> {
    spec.validate()?;
    check_rate(sample_rate)?;
    let sr = f64::from(sample_rate);
    let n = (spec.duration * sr).round() as usize;
    let nyquist = sr / 2.0;
    let norm: f64 = (1..=spec.harmonics).map(|k| 1.0 / f64::from(k)).sum();
    let gain = spec.amplitude / norm;

    let mut phase = 0.0f64;
    let mut signal: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let f = spec.f0.at(i as f64 / sr);
        let mut x = 0.0;
        for k in 1..=spec.harmonics {
            let kf = f64::from(k);
            if kf * f >= nyquist {
                break;
            }
            x += (kf * phase).sin() / kf;
        }
        signal.push(gain * x);
        phase = (phase + TAU * f / sr).rem_euclid(TAU);
    }

    if spec.snr_db.is_finite() {
        let power = signal.iter().map(|x| x * x).sum::<f64>() / n.max(1) as f64;
        if power > 0.0 {
            let sigma = (power / 10f64.powf(spec.snr_db / 10.0)).sqrt();
            add_noise(&mut signal, sigma, spec.noise_seed);
        }
    }

    finish(signal, sample_rate, "synth")
}

/// Gaussian white noise with the given RMS, clipped to [-1, 1].
pub fn white_noise(rms: f64, duration: f64, sample_rate: u32, seed: u64) -> Result<AudioClip> {
    check_rate(sample_rate)?;
    let n = (duration * f64::from(sample_rate)).round() as usize;
    let mut signal = vec![0.0; n];
    add_noise(&mut signal, rms, seed);
    finish(signal, sample_rate, "noise")
}

fn add_noise(signal: &mut [f64], sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in signal.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *x += sigma * z;
    }
}

fn finish(signal: Vec<f64>, sample_rate: u32, label: &str) -> Result<AudioClip> {
    let samples = signal.into_iter().map(|x| x.clamp(-1.0, 1.0) as f32).collect();
    AudioClip::new(samples, sample_rate, label)
}
