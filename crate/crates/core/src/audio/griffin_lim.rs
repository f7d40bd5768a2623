use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use super::{AnalysisConfig, MelBasis, MelSpectrogram, Stft, Waveform};
use crate::{Error, Result};

/// Momentum of the accelerated Griffin-Lim update.
const MOMENTUM: f64 = 0.99;

/// Non-negative refinement passes applied after the pseudo-inverse.
const REFINE_ITERS: usize = 200;

/// Mel-to-waveform vocoder: mel-filterbank pseudo-inverse to a linear power
/// spectrum, then accelerated Griffin-Lim phase recovery from zero phase.
#[derive(Debug, Clone)]
pub struct MelInverter {
    cfg: AnalysisConfig,
    stft: Stft,
    /// `bins x mel_bins` pseudo-inverse of the filterbank.
    pinv: Vec<Vec<f64>>,
    basis: MelBasis,
    /// Non-zero filterbank weights per linear bin: `(mel index, weight)`.
    columns: Vec<Vec<(usize, f64)>>,
}

impl MelInverter {
    pub fn new(cfg: &AnalysisConfig) -> Result<Self> {
        cfg.validate()?;
        let basis = MelBasis::new(cfg);
        let rows = basis.weights.len();
        let cols = basis.weights[0].len();
        let m = DMatrix::from_fn(rows, cols, |r, c| basis.weights[r][c]);
        let p = m
            .pseudo_inverse(1e-10)
            .map_err(|e| Error::invalid(format!("mel pseudo-inverse failed: {e}")))?;
        let pinv = (0..cols).map(|k| (0..rows).map(|j| p[(k, j)]).collect()).collect();
        let columns = (0..cols)
            .map(|k| (0..rows).filter(|&j| basis.weights[j][k] > 0.0).map(|j| (j, basis.weights[j][k])).collect())
            .collect();
        Ok(Self { cfg: cfg.clone(), stft: cfg.stft(), pinv, basis, columns })
    }

    /// Linear magnitude spectrogram implied by a log-mel spectrogram.
    ///
    /// The clamped pseudo-inverse seeds a non-negative refinement with
    /// multiplicative KL-divergence updates, which fit low-energy mel bins in
    /// relative rather than absolute terms.
    pub fn magnitudes(&self, mel: &MelSpectrogram) -> Vec<Vec<f64>> {
        mel.values()
            .iter()
            .map(|row| {
                let energy: Vec<f64> = row.iter().map(|v| v.exp()).collect();
                let mut power: Vec<f64> = self
                    .pinv
                    .iter()
                    .map(|w| w.iter().zip(&energy).map(|(a, e)| a * e).sum::<f64>().max(super::LOG_FLOOR * 1e-3))
                    .collect();
                self.refine(&energy, &mut power);
                power.into_iter().map(f64::sqrt).collect()
            })
            .collect()
    }

    fn refine(&self, energy: &[f64], power: &mut [f64]) {
        for _ in 0..REFINE_ITERS {
            let approx = self.basis.apply(power);
            let ratio: Vec<f64> = energy.iter().zip(&approx).map(|(e, a)| e / a.max(1e-300)).collect();
            for (k, p) in power.iter_mut().enumerate() {
                let (num, den) = self.columns[k]
                    .iter()
                    .fold((0.0, 0.0), |(n, d), &(m, w)| (n + w * ratio[m], d + w));
                if den > 0.0 {
                    *p *= num / den;
                }
            }
        }
    }

    pub fn invert(&self, mel: &MelSpectrogram, iterations: usize) -> Result<Waveform> {
        if iterations == 0 {
            return Err(Error::invalid("griffin-lim needs at least one iteration"));
        }
        if mel.config() != &self.cfg {
            return Err(Error::invalid("mel analysis config differs from inverter config"));
        }
        let mags = self.magnitudes(mel);
        let len = mel.frames() * self.stft.hop();
        let mut spec: Vec<Vec<Complex64>> = mags
            .iter()
            .map(|f| f.iter().map(|&a| Complex64::new(a, 0.0)).collect())
            .collect();
        let mut prev: Option<Vec<Vec<Complex64>>> = None;
        let m = MOMENTUM / (1.0 + MOMENTUM);
        for _ in 0..iterations {
            let y = self.stft.synthesize(&spec, len);
            let rebuilt = self.stft.analyze(&y);
            for (t, frame) in spec.iter_mut().enumerate() {
                for (k, slot) in frame.iter_mut().enumerate() {
                    let mut a = rebuilt[t][k];
                    if let Some(p) = &prev {
                        a -= p[t][k] * m;
                    }
                    let n = a.norm();
                    let phase = if n > 1e-300 { a / n } else { Complex64::new(1.0, 0.0) };
                    *slot = phase * mags[t][k];
                }
            }
            prev = Some(rebuilt);
        }
        Waveform::new(self.stft.synthesize(&spec, len), self.cfg.sample_rate)
    }
}

/// One-shot convenience wrapper around [`MelInverter`].
pub fn invert_mel(mel: &MelSpectrogram, iterations: usize) -> Result<Waveform> {
    MelInverter::new(mel.config())?.invert(mel, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{mel_spectrogram, LOG_FLOOR};
    use std::f64::consts::PI;

    fn sine_mel() -> MelSpectrogram {
        let w = Waveform::new(
            (0..16000).map(|n| 0.5 * (2.0 * PI * 440.0 * n as f64 / 16000.0).sin()).collect(),
            16000,
        )
        .unwrap();
        mel_spectrogram(&w, &AnalysisConfig::default()).unwrap()
    }

    fn round_trip_error(mel: &MelSpectrogram, iters: usize) -> f64 {
        let w = invert_mel(mel, iters).unwrap();
        mel_spectrogram(&w, mel.config()).unwrap().mean_abs_diff(mel).unwrap()
    }

    #[test]
    fn sine_round_trip_within_half_a_log_unit() {
        let mel = sine_mel();
        let err = round_trip_error(&mel, 60);
        assert!(err <= 0.5, "round-trip mel error {err}");
    }

    #[test]
    fn more_iterations_do_not_hurt() {
        let mel = sine_mel();
        let e1 = round_trip_error(&mel, 1);
        let e60 = round_trip_error(&mel, 60);
        assert!(e60 <= e1, "60 iters {e60} vs 1 iter {e1}");
    }

    #[test]
    fn floor_mel_gives_near_silence() {
        let cfg = AnalysisConfig::default();
        let mel = MelSpectrogram::new(vec![vec![LOG_FLOOR.ln(); 80]; 40], cfg).unwrap();
        let w = invert_mel(&mel, 10).unwrap();
        assert!(w.rms() < 1e-4);
        assert_eq!(w.len(), 40 * 200);
    }

    #[test]
    fn zero_iterations_rejected() {
        assert!(invert_mel(&sine_mel(), 0).is_err());
    }
}
