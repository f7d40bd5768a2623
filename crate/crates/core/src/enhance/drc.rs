use crate::audio::{match_rms, Waveform};
use crate::{Error, Result};

const LEVEL_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DrcConfig {
    pub attack_ms: f64,
    pub release_ms: f64,
    /// Compression starts above this level (dBFS).
    pub threshold_db: f64,
    pub ratio: f64,
    /// Levels below this knee (dBFS) get the full makeup gain.
    pub knee_db: f64,
    pub makeup_db: f64,
}

impl Default for DrcConfig {
    fn default() -> Self {
        Self { attack_ms: 2.0, release_ms: 20.0, threshold_db: -20.0, ratio: 2.0, knee_db: -45.0, makeup_db: 12.0 }
    }
}

impl DrcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.attack_ms > 0.0 && self.release_ms > 0.0) {
            return Err(Error::invalid("drc time constants must be positive"));
        }
        if !(self.ratio >= 1.0) {
            return Err(Error::invalid("drc ratio must be at least 1"));
        }
        if !(self.knee_db < self.threshold_db) {
            return Err(Error::invalid("drc knee must lie below the threshold"));
        }
        // The segment between the knots must not fall.
        if self.knee_db + self.makeup_db > self.threshold_db || self.makeup_db < 0.0 {
            return Err(Error::invalid("drc makeup gain makes the static curve non-monotone"));
        }
        Ok(())
    }

    /// Static input-to-output level map in dB: `+makeup` below the knee,
    /// `ratio:1` above the threshold, straight line between the two knots.
    pub fn curve_db(&self, level_db: f64) -> f64 {
        if level_db <= self.knee_db {
            level_db + self.makeup_db
        } else if level_db >= self.threshold_db {
            self.threshold_db + (level_db - self.threshold_db) / self.ratio
        } else {
            let t = (level_db - self.knee_db) / (self.threshold_db - self.knee_db);
            let lo = self.knee_db + self.makeup_db;
            lo + t * (self.threshold_db - lo)
        }
    }
}

fn coefficient(ms: f64, sample_rate: u32) -> f64 {
    (-1.0 / (ms * 1e-3 * sample_rate as f64)).exp()
}

/// Attack/release peak follower on the rectified signal.
pub fn peak_envelope(x: &[f64], sample_rate: u32, attack_ms: f64, release_ms: f64) -> Vec<f64> {
    let a = coefficient(attack_ms, sample_rate);
    let r = coefficient(release_ms, sample_rate);
    let mut e = 0.0;
    x.iter()
        .map(|s| {
            let v = s.abs();
            let c = if v > e { a } else { r };
            e = c * e + (1.0 - c) * v;
            e
        })
        .collect()
}

/// Sample-wise gain from the smoothed envelope mapped through the static
/// curve; output RMS equals input RMS.
pub fn dynamic_range_compression(w: &Waveform, cfg: &DrcConfig) -> Result<Waveform> {
    cfg.validate()?;
    if w.is_digital_silence() {
        return Ok(w.clone());
    }
    let env = peak_envelope(w.samples(), w.sample_rate(), cfg.attack_ms, cfg.release_ms);
    let mut out: Vec<f64> = w
        .samples()
        .iter()
        .zip(&env)
        .map(|(s, e)| {
            let level = (20.0 * e.log10()).max(LEVEL_FLOOR_DB);
            s * 10f64.powf((cfg.curve_db(level) - level) / 20.0)
        })
        .collect();
    match_rms(&mut out, w.rms());
    Waveform::new(out, w.sample_rate())
}
