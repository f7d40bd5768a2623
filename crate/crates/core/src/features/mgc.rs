use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::{AnalysisConfig, Waveform};

/// Mel-cepstral analysis settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MgcConfig {
    pub order: usize,
    /// All-pass frequency-warping constant.
    pub alpha: f64,
    /// Lowest f0 of interest; sets the cepstral lifter at `fs / f0_floor`.
    pub f0_floor_hz: f64,
    /// Points on the warped frequency axis used for the cosine transform.
    pub warped_points: usize,
}

impl Default for MgcConfig {
    fn default() -> Self {
        Self { order: 24, alpha: 0.42, f0_floor_hz: 60.0, warped_points: 256 }
    }
}

/// Frames x (order + 1) mel-cepstral coefficients. Coefficient 0 carries the
/// log energy, coefficient 1 the spectral tilt (positive = falling spectrum).
#[derive(Debug, Clone, PartialEq)]
pub struct MgcTrack {
    pub coeffs: Vec<Vec<f64>>,
    pub order: usize,
    pub alpha: f64,
}

impl MgcTrack {
    pub fn frames(&self) -> usize {
        self.coeffs.len()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.coeffs.iter().map(|row| row[c]).collect()
    }
}

const MAG_FLOOR: f64 = 1e-10;

/// Per-frame mel-warped cepstrum of the cepstrally smoothed log-magnitude
/// spectrum, framed like the mel spectrogram.
///
/// The smoothed log spectrum is resampled on a uniform grid of the warped
/// axis `W(w) = w + 2 atan(a sin w / (1 - a cos w))` (midpoint rule), so
/// `c0` is its mean and `c_m = 2 mean(L cos(m W))`. The midpoint grid makes
/// the cosine sums of a constant vanish exactly, so a gain change moves only
/// `c0`.
pub fn mgc_from_spectrum(w: &Waveform, analysis: &AnalysisConfig, cfg: &MgcConfig) -> MgcTrack {
    let stft = analysis.stft();
    let n = stft.fft_size();
    let bins = stft.bins();
    let lifter = ((w.sample_rate() as f64 / cfg.f0_floor_hz).floor() as usize).min(n / 2);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);

    // warped grid -> fractional linear-bin positions
    let k = cfg.warped_points;
    let grid: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let omega_w = PI * (i as f64 + 0.5) / k as f64;
            let omega = unwarp(omega_w, cfg.alpha);
            (omega_w, omega / PI * (bins - 1) as f64)
        })
        .collect();

    let coeffs = stft
        .analyze(w.samples())
        .into_iter()
        .map(|spec| {
            let log_mag: Vec<f64> = spec.iter().map(|c| c.norm().max(MAG_FLOOR).ln()).collect();
            let smooth = cepstral_smooth(&log_mag, lifter, fft.as_ref());
            let warped: Vec<f64> = grid.iter().map(|&(_, pos)| interp(&smooth, pos)).collect();
            (0..=cfg.order)
                .map(|m| {
                    let s: f64 = warped
                        .iter()
                        .zip(&grid)
                        .map(|(v, &(ow, _))| v * (m as f64 * ow).cos())
                        .sum::<f64>()
                        / k as f64;
                    if m == 0 {
                        s
                    } else {
                        2.0 * s
                    }
                })
                .collect()
        })
        .collect();
    MgcTrack { coeffs, order: cfg.order, alpha: cfg.alpha }
}

/// Inverse of the first-order all-pass warp: warping with `-alpha`.
fn unwarp(omega_w: f64, alpha: f64) -> f64 {
    omega_w + 2.0 * ((-alpha) * omega_w.sin()).atan2(1.0 + alpha * omega_w.cos())
}

fn interp(v: &[f64], pos: f64) -> f64 {
    let i = (pos.floor() as usize).min(v.len() - 2);
    let f = pos - i as f64;
    v[i] * (1.0 - f) + v[i + 1] * f
}

/// Keeps cepstral quefrencies `|q| < lifter` of a half-spectrum log magnitude.
pub(crate) fn cepstral_smooth(log_half: &[f64], lifter: usize, fft: &dyn rustfft::Fft<f64>) -> Vec<f64> {
    let bins = log_half.len();
    let n = (bins - 1) * 2;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(if k < bins { log_half[k] } else { log_half[n - k] }, 0.0))
        .collect();
    // even real sequence: forward FFT equals n x inverse
    fft.process(&mut buf);
    for (q, c) in buf.iter_mut().enumerate() {
        let quefrency = q.min(n - q);
        if quefrency >= lifter {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    fft.process(&mut buf);
    buf[..bins].iter().map(|c| c.re / n as f64).collect()
}
