use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn to_f64(samples: &[f32]) -> Vec<f64> {
    samples.iter().map(|&s| f64::from(s)).collect()
}

pub(crate) fn hann(n: usize) -> impl Iterator<Item = f64> {
    let denom = (n.max(2) - 1) as f64;
    (0..n).map(move |i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / denom).cos())
}

/// Magnitude spectrum of `signal` zero-padded to `len`, bins `0..=len/2`.
pub(crate) fn magnitude_spectrum(signal: &[f64], len: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(len, Complex64::default());
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len).process(&mut buf));
    buf.truncate(len / 2 + 1);
    buf.into_iter().map(|c| c.norm()).collect()
}

/// `c[lag] = Σ_i a[i]·b[i + lag]` for `lag` in `0..=max_lag`, via FFT.
/// Requires `a.len() + max_lag <= b.len()`.
pub(crate) fn cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Vec<f64> {
    debug_assert!(a.len() + max_lag <= b.len());
    let len = (a.len() + b.len()).next_power_of_two();
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fa.resize(len, Complex64::default());
    fb.resize(len, Complex64::default());
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let forward = planner.plan_fft_forward(len);
        forward.process(&mut fa);
        forward.process(&mut fb);
        for (x, y) in fb.iter_mut().zip(&fa) {
            *x *= y.conj();
        }
        planner.plan_fft_inverse(len).process(&mut fb);
    });
    let scale = 1.0 / len as f64;
    fb[..=max_lag].iter().map(|c| c.re * scale).collect()
}

/// `r[lag] = Σ_i x[i]·x[i + lag]` over the full overlap, `lag` in `0..=max_lag`.
pub(crate) fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let len = (2 * x.len()).next_power_of_two();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(len, Complex64::default());
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        planner.plan_fft_forward(len).process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex64::new(c.norm_sqr(), 0.0);
        }
        planner.plan_fft_inverse(len).process(&mut buf);
    });
    let scale = 1.0 / len as f64;
    buf[..=max_lag.min(x.len().saturating_sub(1))]
        .iter()
        .map(|c| c.re * scale)
        .collect()
}

/// Cumulative sum of squares, `prefix[i] = Σ_{j<i} x[j]²`.
pub(crate) fn energy_prefix(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v * v;
        out.push(acc);
    }
    out
}

/// Vertex of the parabola through `(−1, a)`, `(0, b)`, `(1, c)`: returns the
/// offset in `[-0.5, 0.5]` and the interpolated value.
pub(crate) fn parabolic(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom == 0.0 || !denom.is_finite() {
        return (0.0, b);
    }
    let offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (offset, b - 0.25 * (a - c) * offset)
}

/// Lag range `[sr/f_max, sr/f_min]`, clipped so every lag keeps at least
/// half the frame in overlap.
pub(crate) fn lag_range(sample_rate: u32, f_min: f64, f_max: f64, frame_len: usize) -> Option<(usize, usize)> {
    let sr = f64::from(sample_rate);
    let lo = ((sr / f_max).floor() as usize).max(2);
    let hi = ((sr / f_min).ceil() as usize).min(frame_len / 2);
    (lo + 2 <= hi).then_some((lo, hi))
}
