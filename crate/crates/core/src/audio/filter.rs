use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Smooth 0..1 weight that is 1 inside `[lo, hi]` with raised-cosine
/// shoulders of width `edge` outside the band.
pub(crate) fn band_weight(hz: f64, lo: f64, hi: f64, edge: f64) -> f64 {
    if hz >= lo && hz <= hi {
        1.0
    } else {
        let d = if hz < lo { lo - hz } else { hz - hi };
        if d >= edge {
            0.0
        } else {
            0.5 * (1.0 + (PI * d / edge).cos())
        }
    }
}

/// Applies a zero-phase magnitude response `gain(hz)` to the whole signal.
pub(crate) fn filter_whole(x: &[f64], sample_rate: u32, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = x.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        *v *= gain(bin as f64 * sample_rate as f64 / n as f64);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}
