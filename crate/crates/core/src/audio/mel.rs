use super::{Stft, Waveform};
use crate::{Error, Result};

/// Natural-log floor applied to mel energies: `ln(max(e, 1e-10))`.
pub const LOG_FLOOR: f64 = 1e-10;

/// STFT and mel-filterbank parameters shared by analysis and inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub sample_rate: u32,
    pub frame_length_ms: f64,
    pub frame_shift_ms: f64,
    pub fft_size: usize,
    pub mel_bins: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            sample_rate: super::SAMPLE_RATE,
            frame_length_ms: 50.0,
            frame_shift_ms: 12.5,
            fft_size: 1024,
            mel_bins: 80,
            fmin_hz: 0.0,
            fmax_hz: 8000.0,
        }
    }
}

impl AnalysisConfig {
    pub fn frame_len(&self) -> usize {
        (self.frame_length_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop(&self) -> usize {
        (self.frame_shift_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_length_ms <= self.frame_shift_ms || self.hop() == 0 {
            return Err(Error::invalid("frame length must exceed a positive frame shift"));
        }
        if self.fft_size < self.frame_len() {
            return Err(Error::invalid("fft size smaller than frame length"));
        }
        if self.fmax_hz > self.sample_rate as f64 / 2.0 || self.fmin_hz < 0.0 || self.fmin_hz >= self.fmax_hz {
            return Err(Error::invalid("mel band edges must satisfy 0 <= fmin < fmax <= Nyquist"));
        }
        if self.mel_bins == 0 {
            return Err(Error::invalid("mel_bins must be positive"));
        }
        Ok(())
    }

    pub fn stft(&self) -> Stft {
        Stft::hann(self.frame_len(), self.hop(), self.fft_size)
    }

    /// Frame count for a waveform of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        super::frame_count(len, self.hop())
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK-scale mel filterbank with unit peaks.
#[derive(Debug, Clone)]
pub struct MelBasis {
    /// `mel_bins` rows of `fft_size / 2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
    pub centers_hz: Vec<f64>,
}

impl MelBasis {
    pub fn new(cfg: &AnalysisConfig) -> Self {
        let bins = cfg.fft_size / 2 + 1;
        let m_lo = hz_to_mel(cfg.fmin_hz);
        let m_hi = hz_to_mel(cfg.fmax_hz);
        let edges: Vec<f64> = (0..cfg.mel_bins + 2)
            .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (cfg.mel_bins + 1) as f64))
            .collect();
        let bin_hz = cfg.sample_rate as f64 / cfg.fft_size as f64;
        let weights = (0..cfg.mel_bins)
            .map(|m| {
                let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= c {
                            (f - lo) / (c - lo)
                        } else {
                            (hi - f) / (hi - c)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { weights, centers_hz: edges[1..=cfg.mel_bins].to_vec() }
    }

    /// Mel energies of one power spectrum.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| row.iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }

    /// Index of the filter whose centre frequency is closest to `hz`.
    pub fn nearest_bin(&self, hz: f64) -> usize {
        let mut best = 0;
        for (i, c) in self.centers_hz.iter().enumerate() {
            if (c - hz).abs() < (self.centers_hz[best] - hz).abs() {
                best = i;
            }
        }
        best
    }
}

/// Frames x mel-bins matrix of natural-log mel energies.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    values: Vec<Vec<f64>>,
    config: AnalysisConfig,
}

impl MelSpectrogram {
    pub fn new(values: Vec<Vec<f64>>, config: AnalysisConfig) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("mel spectrogram needs at least one frame"));
        }
        for row in &values {
            if row.len() != config.mel_bins {
                return Err(Error::invalid(format!(
                    "mel frame has {} bins, expected {}",
                    row.len(),
                    config.mel_bins
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite mel value"));
            }
        }
        Ok(Self { values, config })
    }

    pub fn frames(&self) -> usize {
        self.values.len()
    }

    pub fn bins(&self) -> usize {
        self.config.mel_bins
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t]
    }

    /// Row-major flattening.
    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Mean absolute difference over all entries; shapes must agree.
    pub fn mean_abs_diff(&self, other: &MelSpectrogram) -> Result<f64> {
        if self.frames() != other.frames() || self.bins() != other.bins() {
            return Err(Error::invalid("mel shape mismatch"));
        }
        let n = (self.frames() * self.bins()) as f64;
        Ok(self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / n)
    }
}

/// Log-mel analysis with centred, reflection-padded framing.
pub fn mel_spectrogram(w: &Waveform, cfg: &AnalysisConfig) -> Result<MelSpectrogram> {
    cfg.validate()?;
    if w.sample_rate() != cfg.sample_rate {
        return Err(Error::invalid(format!(
            "waveform rate {} Hz does not match analysis rate {} Hz",
            w.sample_rate(),
            cfg.sample_rate
        )));
    }
    if w.len() < cfg.frame_len() {
        return Err(Error::invalid(format!(
            "waveform of {} samples is shorter than one {}-sample frame",
            w.len(),
            cfg.frame_len()
        )));
    }
    let basis = MelBasis::new(cfg);
    let stft = cfg.stft();
    let values = stft
        .analyze(w.samples())
        .into_iter()
        .map(|frame| {
            let power: Vec<f64> = frame.iter().map(|c| c.norm_sqr()).collect();
            basis.apply(&power).into_iter().map(|e| e.max(LOG_FLOOR).ln()).collect()
        })
        .collect();
    MelSpectrogram::new(values, cfg.clone())
}
