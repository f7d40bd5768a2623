use super::conditioning::moments;
use super::{estimate_f0, mgc_from_spectrum, F0Config, MgcConfig};
use crate::audio::{read_wav, AnalysisConfig, Waveform};
use crate::corpus::{Manifest, Style};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureMoments {
    pub mean: f64,
    pub std: f64,
}

/// Frame-pooled statistics for one style partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StyleMoments {
    pub utterances: usize,
    /// Over voiced frames only.
    pub f0_hz: FeatureMoments,
    pub mgc0: FeatureMoments,
    pub mgc1: FeatureMoments,
}

/// Contrast between two style partitions; deltas are `a − b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LombardStats {
    pub a: StyleMoments,
    pub b: StyleMoments,
    pub delta_f0_hz: f64,
    pub delta_mgc0: f64,
    pub delta_mgc1: f64,
}

fn style_moments(utts: &[Waveform], cfg: &AnalysisConfig) -> Result<StyleMoments> {
    if utts.is_empty() {
        return Err(Error::invalid("style partition has no utterances"));
    }
    let (mut f0, mut c0, mut c1) = (Vec::new(), Vec::new(), Vec::new());
    for w in utts {
        f0.extend(estimate_f0(w, cfg, &F0Config::default()).voiced());
        let m = mgc_from_spectrum(w, cfg, &MgcConfig::default());
        c0.extend(m.column(0));
        c1.extend(m.column(1));
    }
    let fm = |v: &[f64]| moments(v).map(|(mean, std)| FeatureMoments { mean, std });
    Ok(StyleMoments {
        utterances: utts.len(),
        // A partition without any voiced frame reports a zero f0 mean.
        f0_hz: fm(&f0).unwrap_or(FeatureMoments { mean: 0.0, std: 0.0 }),
        mgc0: fm(&c0).ok_or_else(|| Error::invalid("no frames"))?,
        mgc1: fm(&c1).ok_or_else(|| Error::invalid("no frames"))?,
    })
}

pub fn lombard_contrast_waveforms(a: &[Waveform], b: &[Waveform], cfg: &AnalysisConfig) -> Result<LombardStats> {
    let a = style_moments(a, cfg)?;
    let b = style_moments(b, cfg)?;
    Ok(LombardStats {
        a,
        b,
        delta_f0_hz: a.f0_hz.mean - b.f0_hz.mean,
        delta_mgc0: a.mgc0.mean - b.mgc0.mean,
        delta_mgc1: a.mgc1.mean - b.mgc1.mean,
    })
}

/// Feature contrast between the utterances of two styles in a manifest.
pub fn lombard_contrast(manifest: &Manifest, style_a: Style, style_b: Style, cfg: &AnalysisConfig) -> Result<LombardStats> {
    let load = |s: Style| -> Result<Vec<Waveform>> {
        manifest.style_records(s).map(|r| Ok(read_wav(&r.wav_path)?.to_standard_rate())).collect()
    };
    lombard_contrast_waveforms(&load(style_a)?, &load(style_b)?, cfg)
}
