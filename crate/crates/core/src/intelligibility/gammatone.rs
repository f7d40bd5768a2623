use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::SiibConfig;
use crate::audio::Waveform;

/// Log of this value is reported for envelope windows with no energy.
const ENVELOPE_FLOOR: f64 = 1e-10;

/// Log-compressed channel envelopes, `channels x frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    pub center_hz: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Envelopes {
    pub fn channels(&self) -> usize {
        self.values.len()
    }

    pub fn frames(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn floor() -> f64 {
        ENVELOPE_FLOOR.ln()
    }
}

fn erb(hz: f64) -> f64 {
    24.7 * (4.37e-3 * hz + 1.0)
}

fn erb_number(hz: f64) -> f64 {
    21.4 * (4.37e-3 * hz + 1.0).log10()
}

fn erb_number_inv(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 4.37e-3
}

/// `n` centre frequencies equally spaced on the ERB-number scale.
pub fn erb_space(lo_hz: f64, hi_hz: f64, n: usize) -> Vec<f64> {
    let (a, b) = (erb_number(lo_hz), erb_number(hi_hz));
    (0..n).map(|i| erb_number_inv(a + (b - a) * i as f64 / (n - 1).max(1) as f64)).collect()
}

/// Fourth-order gammatone channel magnitude envelope: the signal is shifted
/// to baseband at `fc` and passed through four identical complex one-pole
/// low-pass stages, giving unit gain at `fc`.
fn channel_envelope(x: &[f64], fs: f64, fc: f64) -> Vec<f64> {
    let pole = (-2.0 * PI * 1.019 * erb(fc) / fs).exp();
    let rot = Complex64::from_polar(1.0, -2.0 * PI * fc / fs);
    let mut osc = Complex64::new(1.0, 0.0);
    let mut stages = [Complex64::new(0.0, 0.0); 4];
    x.iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut v = osc * s;
            for st in stages.iter_mut() {
                *st = v * (1.0 - pole) + *st * pole;
                v = *st;
            }
            osc *= rot;
            if i % 1024 == 0 {
                osc /= osc.norm();
            }
            // |baseband| = envelope; the factor 2 restores the amplitude of a
            // real sinusoid at fc.
            2.0 * v.norm()
        })
        .collect()
}

/// Two cascaded one-pole low-pass sections.
fn smooth(x: &mut [f64], fs: f64, cutoff_hz: f64) {
    let p = (-2.0 * PI * cutoff_hz / fs).exp();
    for _ in 0..2 {
        let mut y = 0.0;
        for v in x.iter_mut() {
            y = (1.0 - p) * *v + p * y;
            *v = y;
        }
    }
}

/// Channel envelopes low-passed, averaged over non-overlapping windows of
/// `1 / frame_rate_hz` and log-compressed. Frame count is
/// `floor(duration * frame_rate_hz)`.
pub fn gammatone_envelopes(w: &Waveform, cfg: &SiibConfig) -> Envelopes {
    let fs = w.sample_rate() as f64;
    let win = (fs / cfg.frame_rate_hz).round() as usize;
    let frames = w.len() / win;
    let center_hz = erb_space(cfg.low_hz, cfg.high_hz, cfg.channels);
    let values = center_hz
        .iter()
        .map(|&fc| {
            let mut env = channel_envelope(w.samples(), fs, fc);
            smooth(&mut env, fs, cfg.envelope_cutoff_hz);
            (0..frames)
                .map(|t| {
                    let m = env[t * win..(t + 1) * win].iter().sum::<f64>() / win as f64;
                    m.max(ENVELOPE_FLOOR).ln()
                })
                .collect()
        })
        .collect();
    Envelopes { center_hz, values }
}
