use rustfft::FftPlanner;

use crate::audio::{band_weight, match_rms, Stft, Waveform};
use crate::features::cepstral_smooth;
use crate::{Error, Result};

const FRAME: usize = 512;
const HOP: usize = 128;
const FFT: usize = 1024;
const MAG_FLOOR: f64 = 1e-10;
/// Lifter of the coarse reference envelope the formant envelope is compared to.
const REFERENCE_LIFTER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SsConfig {
    /// Formant sharpening exponent in `[0, 1]`.
    pub beta: f64,
    /// Cepstral lifter of the formant envelope.
    pub lifter: usize,
    pub boost_db: f64,
    pub boost_lo_hz: f64,
    pub boost_hi_hz: f64,
}

impl Default for SsConfig {
    fn default() -> Self {
        Self { beta: 0.3, lifter: 40, boost_db: 6.0, boost_lo_hz: 1000.0, boost_hi_hz: 4000.0 }
    }
}

impl SsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("ss beta {} outside [0, 1]", self.beta)));
        }
        if self.boost_db < 0.0 || !self.boost_db.is_finite() {
            return Err(Error::invalid("ss boost must be a non-negative dB value"));
        }
        if self.lifter <= REFERENCE_LIFTER || self.lifter >= FFT / 2 {
            return Err(Error::invalid(format!("ss lifter must lie in ({REFERENCE_LIFTER}, {})", FFT / 2)));
        }
        if !(self.boost_lo_hz < self.boost_hi_hz) {
            return Err(Error::invalid("ss boost band is empty"));
        }
        Ok(())
    }

    /// Fixed tilt-reducing boost: `boost_db` inside the band with
    /// raised-cosine shoulders half the band's lower edge wide below and
    /// half its upper edge wide above.
    fn boost(&self, hz: f64) -> f64 {
        let g = 10f64.powf(self.boost_db / 20.0) - 1.0;
        let w = if hz < self.boost_lo_hz {
            band_weight(hz, self.boost_lo_hz, self.boost_hi_hz, 0.5 * self.boost_lo_hz)
        } else {
            band_weight(hz, self.boost_lo_hz, self.boost_hi_hz, 0.5 * self.boost_hi_hz)
        };
        1.0 + g * w
    }
}

/// Formant sharpening plus fixed mid-band boost, applied per STFT frame and
/// resynthesised by overlap-add; output RMS equals input RMS.
///
/// Each bin gets gain `exp(beta * (E(k) - R(k)))`, where `E` is the log
/// envelope liftered at `cfg.lifter` and `R` a much coarser envelope, so
/// formant peaks rise and the valleys between them fall.
pub fn spectral_shaping(w: &Waveform, cfg: &SsConfig) -> Result<Waveform> {
    cfg.validate()?;
    if w.is_digital_silence() {
        return Ok(w.clone());
    }
    let stft = Stft::hann(FRAME, HOP, FFT);
    let fft = FftPlanner::new().plan_fft_forward(FFT);
    let hz_per_bin = w.sample_rate() as f64 / FFT as f64;
    let boost: Vec<f64> = (0..stft.bins()).map(|k| cfg.boost(k as f64 * hz_per_bin)).collect();
    let mut frames = stft.analyze(w.samples());
    for frame in frames.iter_mut() {
        let log_mag: Vec<f64> = frame.iter().map(|c| c.norm().max(MAG_FLOOR).ln()).collect();
        let env = cepstral_smooth(&log_mag, cfg.lifter, fft.as_ref());
        let reference = cepstral_smooth(&log_mag, REFERENCE_LIFTER, fft.as_ref());
        for (k, c) in frame.iter_mut().enumerate() {
            *c *= (cfg.beta * (env[k] - reference[k])).exp() * boost[k];
        }
    }
    let mut out = stft.synthesize(&frames, w.len());
    match_rms(&mut out, w.rms());
    Waveform::new(out, w.sample_rate())
}
