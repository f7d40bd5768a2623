//! Noise-independent intelligibility enhancement: spectral shaping followed
//! by dynamic range compression.

mod drc;
mod ss;

pub use drc::{dynamic_range_compression, peak_envelope, DrcConfig};
pub use ss::{spectral_shaping, SsConfig};

use crate::audio::Waveform;
use crate::Result;

/// Spectral shaping then compression, both with default settings.
pub fn ssdrc(w: &Waveform) -> Result<Waveform> {
    ssdrc_with(w, &SsConfig::default(), &DrcConfig::default())
}

pub fn ssdrc_with(w: &Waveform, ss: &SsConfig, drc: &DrcConfig) -> Result<Waveform> {
    dynamic_range_compression(&spectral_shaping(w, ss)?, drc)
}
