use crate::audio::{frame_count, AnalysisConfig, Stft, Waveform};

/// Normalised-autocorrelation pitch tracker settings.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Config {
    pub floor_hz: f64,
    pub ceil_hz: f64,
    /// Frames are voiced when `ln(peak clarity)` reaches this value.
    pub log_clarity_threshold: f64,
    /// Candidate peaks within this fraction of the best clarity compete;
    /// the shortest lag among them wins (suppresses octave-down errors).
    pub peak_tolerance: f64,
}

impl Default for F0Config {
    fn default() -> Self {
        Self { floor_hz: 60.0, ceil_hz: 400.0, log_clarity_threshold: -0.3, peak_tolerance: 0.9 }
    }
}

/// Per-frame f0 in Hz, 0 for unvoiced frames.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub f0_hz: Vec<f64>,
    pub frame_shift_ms: f64,
}

impl F0Track {
    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0_hz.iter().copied().filter(|&f| f > 0.0)
    }

    pub fn voicing(&self) -> Vec<bool> {
        self.f0_hz.iter().map(|&f| f > 0.0).collect()
    }

    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }
}

/// One f0 value per mel frame, using the same centred framing as
/// [`crate::audio::mel_spectrogram`].
pub fn estimate_f0(w: &Waveform, analysis: &AnalysisConfig, cfg: &F0Config) -> F0Track {
    let frames = frame_count(w.len(), analysis.hop());
    let framing = Stft::with_window(vec![1.0; analysis.frame_len()], analysis.hop(), analysis.frame_len());
    let fs = w.sample_rate() as f64;
    let min_lag = ((fs / cfg.ceil_hz).floor() as usize).max(2);
    let max_lag = (fs / cfg.floor_hz).ceil() as usize;
    let f0_hz = (0..frames)
        .map(|t| {
            let mut x = framing.raw_frame(w.samples(), t);
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            x.iter_mut().for_each(|v| *v -= mean);
            frame_f0(&x, fs, min_lag, max_lag.min(x.len() / 2), cfg)
        })
        .collect();
    F0Track { f0_hz, frame_shift_ms: analysis.frame_shift_ms }
}

fn frame_f0(x: &[f64], fs: f64, min_lag: usize, max_lag: usize, cfg: &F0Config) -> f64 {
    if max_lag <= min_lag + 1 {
        return 0.0;
    }
    let n = x.len();
    // prefix sums of squares for the lag-dependent normalisation
    let mut sq = vec![0.0; n + 1];
    for i in 0..n {
        sq[i + 1] = sq[i] + x[i] * x[i];
    }
    if sq[n] <= 1e-12 * n as f64 {
        return 0.0;
    }
    let lo = min_lag - 1;
    let hi = max_lag + 1;
    let r: Vec<f64> = (lo..=hi)
        .map(|lag| {
            let m = n - lag;
            let dot: f64 = x[..m].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            let e = (sq[m] * (sq[n] - sq[lag])).sqrt();
            if e > 0.0 {
                dot / e
            } else {
                0.0
            }
        })
        .collect();
    let at = |lag: usize| r[lag - lo];
    let peaks: Vec<usize> = (min_lag..=max_lag)
        .filter(|&l| at(l) > at(l - 1) && at(l) >= at(l + 1) && at(l) > 0.0)
        .collect();
    let best = peaks.iter().map(|&l| at(l)).fold(0.0, f64::max);
    let Some(&lag) = peaks.iter().find(|&&l| at(l) >= cfg.peak_tolerance * best) else {
        return 0.0;
    };
    let clarity = at(lag);
    if clarity <= 0.0 || clarity.ln() < cfg.log_clarity_threshold {
        return 0.0;
    }
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let f0 = fs / (lag as f64 + shift);
    if f0 < cfg.floor_hz || f0 > cfg.ceil_hz {
        0.0
    } else {
        f0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn track(samples: Vec<f64>) -> F0Track {
        estimate_f0(&Waveform::new(samples, 16000).unwrap(), &AnalysisConfig::default(), &F0Config::default())
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    fn sawtooth(f0: f64, len: usize) -> Vec<f64> {
        (0..len).map(|n| 0.4 * (2.0 * ((n as f64 * f0 / 16000.0) % 1.0) - 1.0)).collect()
    }

    #[test]
    fn silence_is_unvoiced() {
        let t = track(vec![0.0; 16000]);
        assert_eq!(t.len(), 80);
        assert!(t.f0_hz.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn sine_220() {
        let t = track((0..16000).map(|n| 0.5 * (2.0 * PI * 220.0 * n as f64 / 16000.0).sin()).collect());
        let voiced: Vec<f64> = t.voiced().collect();
        assert!(voiced.len() as f64 >= 0.9 * t.len() as f64);
        let err = median(voiced.iter().map(|f| (f - 220.0).abs()).collect());
        assert!(err < 2.0, "median error {err}");
    }

    #[test]
    fn sawtooth_120_without_octave_errors() {
        let t = track(sawtooth(120.0, 16000));
        let voiced: Vec<f64> = t.voiced().collect();
        assert!(!voiced.is_empty());
        let err = median(voiced.iter().map(|f| (f - 120.0).abs()).collect());
        assert!(err < 2.0, "median error {err}");
        let octave = voiced.iter().filter(|f| (*f / 120.0).log2().abs() > 0.5).count();
        assert!((octave as f64) <= 0.05 * voiced.len() as f64);
    }

    #[test]
    fn harmonic_suite_octave_error_rate_below_five_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (mut errors, mut total) = (0usize, 0usize);
        for _ in 0..100 {
            let f0: f64 = rng.random_range(80.0..350.0);
            let amps: Vec<f64> = (1..=8).map(|h| rng.random_range(0.2..1.0) / h as f64).collect();
            let x: Vec<f64> = (0..4000)
                .map(|n| {
                    let t = n as f64 / 16000.0;
                    0.2 * amps.iter().enumerate().map(|(h, a)| a * (2.0 * PI * f0 * (h + 1) as f64 * t).sin()).sum::<f64>()
                })
                .collect();
            for f in track(x).voiced() {
                total += 1;
                if (f / f0).log2().abs() > 0.5 {
                    errors += 1;
                }
            }
        }
        assert!(total > 0);
        assert!((errors as f64) < 0.05 * total as f64, "{errors}/{total} octave errors");
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = track((0..16000).map(|_| rng.random_range(-0.3..0.3)).collect());
        assert!(t.voiced().count() < t.len() / 10);
    }
}
