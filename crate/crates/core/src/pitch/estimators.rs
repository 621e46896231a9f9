//! Fundamental-frequency estimators. Each takes one analysis frame and
//! returns an optional f0 with a confidence in [0, 1].

use super::dsp::{
    autocorrelation, cross_correlation, energy_prefix, hann, lag_range, magnitude_spectrum, parabolic, to_f64,
};
use super::{Estimate, EstimatorConfig};
use crate::audio::AudioFrame;

/// Below this normalized autocorrelation the ACF estimator reports unvoiced.
pub const ACF_MIN_CONFIDENCE: f64 = 0.3;

/// Candidate ACF peaks within this fraction of the tallest one are treated
/// as equivalent; the shortest such lag wins, which suppresses picking a
/// multiple of the true period.
const ACF_PEAK_TOLERANCE: f64 = 0.9;

/// Strongest spectral peak in `[f_min, f_max]` of the Hann-windowed,
/// zero-padded frame, refined by a parabola through the log magnitudes.
pub fn estimate_fft_peak(frame: &AudioFrame, cfg: &EstimatorConfig) -> Estimate {
    let n = frame.len();
    if n < 2 {
        return Estimate::unvoiced(0.0);
    }
    let windowed: Vec<f64> = frame
        .samples
        .iter()
        .zip(hann(n))
        .map(|(&s, w)| f64::from(s) * w)
        .collect();
    let fft_len = n * cfg.fft_zero_pad_factor.max(1);
    let mag = magnitude_spectrum(&windowed, fft_len);
    let bin_hz = f64::from(frame.sample_rate) / fft_len as f64;

    let lo = ((cfg.f_min / bin_hz).ceil() as usize).max(1);
    let hi = ((cfg.f_max / bin_hz).floor() as usize).min(mag.len() - 2);
    if lo > hi {
        return Estimate::unvoiced(0.0);
    }
    let band = &mag[lo..=hi];
    let total: f64 = band.iter().sum();
    if !(total > 1e-12) {
        return Estimate::unvoiced(0.0);
    }
    let (offset, &peak) = band
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("band is nonempty");
    let k = lo + offset;
    let ln = |v: f64| v.max(1e-300).ln();
    let (delta, _) = parabolic(ln(mag[k - 1]), ln(mag[k]), ln(mag[k + 1]));
    let f0 = (k as f64 + delta) * bin_hz;
    let confidence = (peak / total).clamp(0.0, 1.0);
    in_range(f0, confidence, cfg)
}

/// Normalized autocorrelation over the lag range implied by `[f_min, f_max]`.
pub fn estimate_acf(frame: &AudioFrame, cfg: &EstimatorConfig) -> Estimate {
    let x = to_f64(&frame.samples);
    let n = x.len();
    let Some((lo, hi)) = lag_range(frame.sample_rate, cfg.f_min, cfg.f_max, n) else {
        return Estimate::unvoiced(0.0);
    };
    let energy = energy_prefix(&x);
    if !(energy[n] > 1e-12) {
        return Estimate::unvoiced(0.0);
    }
    let r = autocorrelation(&x, hi + 1);
    let nccf = |lag: usize| {
        let denom = (energy[n - lag] * (energy[n] - energy[lag])).sqrt();
        if denom > 0.0 {
            r[lag] / denom
        } else {
            0.0
        }
    };
    let values: Vec<f64> = (lo - 1..=hi + 1).map(nccf).collect();
    let at = |lag: usize| values[lag + 1 - lo];

    let peaks: Vec<usize> = (lo..=hi)
        .filter(|&lag| at(lag) >= at(lag - 1) && at(lag) > at(lag + 1))
        .collect();
    let tallest = peaks.iter().map(|&l| at(l)).fold(f64::NEG_INFINITY, f64::max);
    let Some(&lag) = peaks.iter().find(|&&l| at(l) >= ACF_PEAK_TOLERANCE * tallest) else {
        return Estimate::unvoiced(0.0);
    };

    let (delta, value) = parabolic(at(lag - 1), at(lag), at(lag + 1));
    let confidence = value.clamp(0.0, 1.0);
    if confidence < ACF_MIN_CONFIDENCE {
        return Estimate::unvoiced(confidence);
    }
    let f0 = f64::from(frame.sample_rate) / (lag as f64 + delta);
    in_range(f0, confidence, cfg)
}

/// YIN: the first dip of the cumulative-mean-normalized difference function
/// below `yin_threshold`, followed down to its local minimum.
pub fn estimate_yin(frame: &AudioFrame, cfg: &EstimatorConfig) -> Estimate {
    let x = to_f64(&frame.samples);
    let n = x.len();
    let Some((lo, hi)) = lag_range(frame.sample_rate, cfg.f_min, cfg.f_max, n) else {
        return Estimate::unvoiced(0.0);
    };
    // One extra lag so the last candidate has a right-hand neighbour.
    let max_lag = hi + 1;
    let width = n - max_lag;
    let energy = energy_prefix(&x);
    let cross = cross_correlation(&x[..width], &x, max_lag);
    let diff = |lag: usize| {
        let d = energy[width] + (energy[lag + width] - energy[lag]) - 2.0 * cross[lag];
        d.max(0.0)
    };

    let mut cmnd = vec![1.0; max_lag + 1];
    let mut running = 0.0;
    for lag in 1..=max_lag {
        let d = diff(lag);
        running += d;
        cmnd[lag] = if running > 0.0 { d * lag as f64 / running } else { 1.0 };
    }

    let Some(mut lag) = (lo..=hi).find(|&l| cmnd[l] < cfg.yin_threshold) else {
        return Estimate::unvoiced(0.0);
    };
    while lag < hi && cmnd[lag + 1] < cmnd[lag] {
        lag += 1;
    }
    let (delta, value) = parabolic(cmnd[lag - 1], cmnd[lag], cmnd[lag + 1]);
    let confidence = (1.0 - value).clamp(0.0, 1.0);
    let f0 = f64::from(frame.sample_rate) / (lag as f64 + delta);
    in_range(f0, confidence, cfg)
}

fn in_range(f0: f64, confidence: f64, cfg: &EstimatorConfig) -> Estimate {
    if f0.is_finite() && (cfg.f_min..=cfg.f_max).contains(&f0) {
        Estimate {
            f0_hz: Some(f0),
            confidence,
        }
    } else {
        Estimate::unvoiced(confidence)
    }
}
