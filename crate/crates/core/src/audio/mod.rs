//! Shared signal foundation: waveforms, WAV I/O, STFT framing, mel analysis
//! and inversion, speech-shaped noise and SNR-controlled mixing.

mod filter;
mod griffin_lim;
mod mel;
mod noise;
mod resample;
mod stft;
mod wav;

pub(crate) use filter::{band_weight, filter_whole};
pub use griffin_lim::{invert_mel, MelInverter};
pub use mel::{mel_spectrogram, AnalysisConfig, MelBasis, MelSpectrogram, LOG_FLOOR};
pub use noise::{
    active_mask, compute_ltas, measured_snr_db, mix_at_snr, read_ltas, snr_gain, speech_shaped_noise, write_ltas,
    Ltas, NoiseCondition, NoiseKind,
};
pub use resample::resample;
pub use stft::{frame_count, reflect_index, Stft};
pub use wav::{read_wav, write_wav, WavFormat};

use crate::{Error, Result};

/// Sample rate every waveform is converted to at ingestion.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono PCM audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    /// Builds a waveform, rejecting empty or non-finite sample data.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("waveform has no samples"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Resamples to [`SAMPLE_RATE`] if needed.
    pub fn to_standard_rate(self) -> Self {
        if self.sample_rate == SAMPLE_RATE {
            return self;
        }
        let samples = resample(&self.samples, self.sample_rate, SAMPLE_RATE);
        Self { samples, sample_rate: SAMPLE_RATE }
    }

    pub fn is_digital_silence(&self) -> bool {
        self.samples.iter().all(|&s| s == 0.0)
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Scales `out` so its RMS equals `target_rms`. Silent signals are left alone.
pub(crate) fn match_rms(out: &mut [f64], target_rms: f64) {
    let r = rms(out);
    if r > 0.0 && target_rms > 0.0 {
        let g = target_rms / r;
        out.iter_mut().for_each(|s| *s *= g);
    }
}
