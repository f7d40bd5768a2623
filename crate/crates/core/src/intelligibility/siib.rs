use std::f64::consts::LN_2;

use super::gammatone::gammatone_envelopes;
use super::mi::gc_mi;
use crate::audio::Waveform;
use crate::{Error, Result};

/// Shortest clean reference accepted by [`siib`], in seconds.
pub const MIN_CLEAN_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SiibConfig {
    pub channels: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Envelope frames per second (one frame per non-overlapping window).
    pub frame_rate_hz: f64,
    pub envelope_cutoff_hz: f64,
    /// Scalar discount for redundancy between neighbouring channels.
    pub redundancy_discount: f64,
}

impl Default for SiibConfig {
    fn default() -> Self {
        Self {
            channels: 24,
            low_hz: 100.0,
            high_hz: 7500.0,
            frame_rate_hz: 40.0,
            envelope_cutoff_hz: 20.0,
            redundancy_discount: 0.75,
        }
    }
}

impl SiibConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 {
            return Err(Error::invalid("siib needs at least two channels"));
        }
        if !(0.0 < self.low_hz && self.low_hz < self.high_hz) {
            return Err(Error::invalid("siib band edges must satisfy 0 < low < high"));
        }
        if !(self.frame_rate_hz > 0.0 && self.envelope_cutoff_hz > 0.0) {
            return Err(Error::invalid("siib rates must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiibScore {
    pub bits_per_second: f64,
}

/// Information shared by the clean and degraded envelopes, in bits/s:
/// summed per-channel copula MI times frame rate times the redundancy
/// discount, converted from nats. The degraded signal is trimmed to the
/// clean length.
pub fn siib(clean: &Waveform, degraded: &Waveform, cfg: &SiibConfig) -> Result<SiibScore> {
    cfg.validate()?;
    if clean.sample_rate() != degraded.sample_rate() {
        return Err(Error::invalid(format!(
            "sample rate mismatch: {} vs {}",
            clean.sample_rate(),
            degraded.sample_rate()
        )));
    }
    if clean.duration_s() < MIN_CLEAN_S {
        return Err(Error::TooShort { got_s: clean.duration_s(), need_s: MIN_CLEAN_S });
    }
    if degraded.len() < clean.len() {
        return Err(Error::invalid(format!(
            "degraded signal ({} samples) shorter than clean ({})",
            degraded.len(),
            clean.len()
        )));
    }
    let trimmed = Waveform::new(degraded.samples()[..clean.len()].to_vec(), degraded.sample_rate())?;
    let a = gammatone_envelopes(clean, cfg);
    let b = gammatone_envelopes(&trimmed, cfg);
    let nats: f64 = a.values.iter().zip(&b.values).map(|(x, y)| gc_mi(x, y).unwrap_or(0.0)).sum();
    Ok(SiibScore { bits_per_second: nats * cfg.frame_rate_hz * cfg.redundancy_discount / LN_2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{compute_ltas, mix_at_snr, speech_shaped_noise, AnalysisConfig, SAMPLE_RATE};
    use crate::corpus::{synth_toy_utterance, Style};
    use crate::rng;

    fn toy(i: usize) -> Waveform {
        synth_toy_utterance(21, i % 4, Style::Neutral, i).unwrap().0
    }

    #[test]
    fn degrades_monotonically_with_noise() {
        let utts: Vec<Waveform> = (0..20).map(toy).collect();
        let ltas = compute_ltas(&utts, &AnalysisConfig::default()).unwrap();
        let cfg = SiibConfig::default();
        for (i, x) in utts.iter().enumerate() {
            let noise = speech_shaped_noise(&ltas, x.duration_s(), i as u64, SAMPLE_RATE).unwrap();
            let s0 = siib(x, x, &cfg).unwrap().bits_per_second;
            let s1 = siib(x, &mix_at_snr(x, &noise, -1.0).unwrap(), &cfg).unwrap().bits_per_second;
            let s9 = siib(x, &mix_at_snr(x, &noise, -9.0).unwrap(), &cfg).unwrap().bits_per_second;
            assert!(s0 > s1 && s1 > s9, "utt {i}: {s0} {s1} {s9}");
        }
    }

    #[test]
    fn independent_noise_carries_almost_nothing() {
        let mut r = rng::seeded(9);
        let x = (0..16000 * 10).map(|_| rng::normal(&mut r)).collect();
        let y = (0..16000 * 10).map(|_| rng::normal(&mut r)).collect();
        let (x, y) = (Waveform::new(x, SAMPLE_RATE).unwrap(), Waveform::new(y, SAMPLE_RATE).unwrap());
        let s = siib(&x, &y, &SiibConfig::default()).unwrap().bits_per_second;
        assert!(s < 5.0, "{s}");
    }

    #[test]
    fn invariant_to_degraded_gain() {
        let x = toy(0);
        let mut r = rng::seeded(3);
        let y: Vec<f64> = x.samples().iter().map(|s| s + 0.05 * rng::normal(&mut r)).collect();
        let y = Waveform::new(y, SAMPLE_RATE).unwrap();
        let base = siib(&x, &y, &SiibConfig::default()).unwrap().bits_per_second;
        for g in [0.5, 2.0] {
            let s = siib(&x, &y.scaled(g), &SiibConfig::default()).unwrap().bits_per_second;
            assert!((s - base).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_short_or_mismatched_input() {
        let short = Waveform::silence(7000, SAMPLE_RATE).unwrap();
        assert!(matches!(siib(&short, &short, &SiibConfig::default()), Err(Error::TooShort { .. })));
        let x = toy(1);
        let cut = Waveform::new(x.samples()[..x.len() - 1].to_vec(), SAMPLE_RATE).unwrap();
        assert!(siib(&x, &cut, &SiibConfig::default()).is_err());
        assert!(SiibConfig { channels: 1, ..SiibConfig::default() }.validate().is_err());
    }
}
