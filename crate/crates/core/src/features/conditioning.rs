use super::{F0Track, MgcTrack};
use crate::{Error, Result};

/// Channels per frame: interpolated log-f0, voicing, mgc0, mgc1.
pub const FEATURE_CHANNELS: usize = 4;

const STD_FLOOR: f64 = 1e-6;

/// Speaker-level log-f0 moments over voiced frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeakerF0Stats {
    pub log_f0_mean: f64,
    pub log_f0_std: f64,
}

impl SpeakerF0Stats {
    pub fn from_tracks<'a>(tracks: impl IntoIterator<Item = &'a F0Track>) -> Result<Self> {
        let logs: Vec<f64> = tracks.into_iter().flat_map(|t| t.voiced().map(f64::ln)).collect();
        let (mean, std) = moments(&logs).ok_or_else(|| Error::invalid("speaker has no voiced frames"))?;
        Ok(Self { log_f0_mean: mean, log_f0_std: std.max(STD_FLOOR) })
    }
}

/// Corpus-level moments of mgc0 and mgc1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMgcStats {
    pub mgc0_mean: f64,
    pub mgc0_std: f64,
    pub mgc1_mean: f64,
    pub mgc1_std: f64,
}

impl GlobalMgcStats {
    pub fn from_tracks<'a>(tracks: impl IntoIterator<Item = &'a MgcTrack>) -> Result<Self> {
        let (mut c0, mut c1) = (Vec::new(), Vec::new());
        for t in tracks {
            c0.extend(t.column(0));
            c1.extend(t.column(1));
        }
        let (m0, s0) = moments(&c0).ok_or_else(|| Error::invalid("no mgc frames"))?;
        let (m1, s1) = moments(&c1).ok_or_else(|| Error::invalid("no mgc frames"))?;
        Ok(Self { mgc0_mean: m0, mgc0_std: s0.max(STD_FLOOR), mgc1_mean: m1, mgc1_std: s1.max(STD_FLOOR) })
    }
}

pub(crate) fn moments(v: &[f64]) -> Option<(f64, f64)> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Decoder conditioning payload, one row per mel frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticFrameFeatures {
    /// `[logf0_interp, voicing, mgc0, mgc1]`, normalised.
    pub frames: Vec<[f64; FEATURE_CHANNELS]>,
    /// Per-channel `(mean, std)` used for normalisation, flattened to
    /// `[m0, s0, m1, s1, m2, s2, m3, s3]`. Voicing is stored as `(0, 1)`.
    pub normalization: [f64; 2 * FEATURE_CHANNELS],
}

impl AcousticFrameFeatures {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f[c]).collect()
    }
}

/// Natural-log f0 with unvoiced gaps filled by linear interpolation between
/// the surrounding voiced frames and edge runs extended from the nearest
/// voiced frame. Returns `None` for fully unvoiced tracks.
pub fn interpolate_log_f0(f0_hz: &[f64]) -> Option<Vec<f64>> {
    let voiced: Vec<usize> = (0..f0_hz.len()).filter(|&i| f0_hz[i] > 0.0).collect();
    let (&first, &last) = (voiced.first()?, voiced.last()?);
    let mut out = vec![0.0; f0_hz.len()];
    out[..=first].iter_mut().for_each(|v| *v = f0_hz[first].ln());
    out[last..].iter_mut().for_each(|v| *v = f0_hz[last].ln());
    for pair in voiced.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (la, lb) = (f0_hz[a].ln(), f0_hz[b].ln());
        for (i, slot) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            let t = (i - a) as f64 / (b - a) as f64;
            *slot = la + (lb - la) * t;
        }
    }
    Some(out)
}

/// Builds the normalised conditioning channels for one utterance. Log-f0 is
/// z-scored with speaker statistics, mgc0/mgc1 with global statistics. A
/// fully unvoiced utterance yields an all-zero log-f0 channel.
pub fn extract_conditioning(
    f0: &F0Track,
    mgc: &MgcTrack,
    speaker: &SpeakerF0Stats,
    global: &GlobalMgcStats,
) -> Result<AcousticFrameFeatures> {
    if f0.len() != mgc.frames() {
        return Err(Error::invalid(format!(
            "f0 track has {} frames, mgc track {}",
            f0.len(),
            mgc.frames()
        )));
    }
    let logf0 = interpolate_log_f0(&f0.f0_hz)
        .map(|v| v.into_iter().map(|l| (l - speaker.log_f0_mean) / speaker.log_f0_std).collect())
        .unwrap_or_else(|| vec![0.0; f0.len()]);
    let frames = (0..f0.len())
        .map(|t| {
            [
                logf0[t],
                if f0.f0_hz[t] > 0.0 { 1.0 } else { 0.0 },
                (mgc.coeffs[t][0] - global.mgc0_mean) / global.mgc0_std,
                (mgc.coeffs[t][1] - global.mgc1_mean) / global.mgc1_std,
            ]
        })
        .collect();
    Ok(AcousticFrameFeatures {
        frames,
        normalization: [
            speaker.log_f0_mean,
            speaker.log_f0_std,
            0.0,
            1.0,
            global.mgc0_mean,
            global.mgc0_std,
            global.mgc1_mean,
            global.mgc1_std,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mgc(frames: usize) -> MgcTrack {
        MgcTrack { coeffs: vec![vec![0.0; 25]; frames], order: 24, alpha: 0.42 }
    }

    fn global() -> GlobalMgcStats {
        GlobalMgcStats { mgc0_mean: 0.0, mgc0_std: 1.0, mgc1_mean: 0.0, mgc1_std: 1.0 }
    }

    #[test]
    fn constant_pitch_at_speaker_mean_normalises_to_zero() {
        let f0 = F0Track { f0_hz: vec![220.0; 50], frame_shift_ms: 12.5 };
        let spk = SpeakerF0Stats { log_f0_mean: 220f64.ln(), log_f0_std: 0.1 };
        let feats = extract_conditioning(&f0, &mgc(50), &spk, &global()).unwrap();
        assert!(feats.channel(0).iter().all(|v| v.abs() < 1e-12));
        assert!(feats.channel(1).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gap_midpoint_is_mean_of_logs() {
        let f0 = [200.0, 200.0, 0.0, 0.0, 0.0, 300.0, 300.0];
        let l = interpolate_log_f0(&f0).unwrap();
        let expected = (200f64.ln() + 300f64.ln()) / 2.0;
        assert!((l[3] - expected).abs() < 1e-12);
        assert!((expected - 5.5011).abs() < 1e-4);
    }

    #[test]
    fn unvoiced_utterance_falls_back_to_zeros() {
        let f0 = F0Track { f0_hz: vec![0.0; 10], frame_shift_ms: 12.5 };
        let spk = SpeakerF0Stats { log_f0_mean: 5.0, log_f0_std: 0.2 };
        let feats = extract_conditioning(&f0, &mgc(10), &spk, &global()).unwrap();
        assert!(feats.frames.iter().all(|f| f[0] == 0.0 && f[1] == 0.0));
    }

    #[test]
    fn edges_extend_nearest_voiced_value() {
        let l = interpolate_log_f0(&[0.0, 0.0, 150.0, 0.0, 180.0, 0.0]).unwrap();
        assert_eq!(l[0], 150f64.ln());
        assert_eq!(l[5], 180f64.ln());
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let f0 = F0Track { f0_hz: vec![100.0; 10], frame_shift_ms: 12.5 };
        let spk = SpeakerF0Stats { log_f0_mean: 5.0, log_f0_std: 0.2 };
        assert!(extract_conditioning(&f0, &mgc(11), &spk, &global()).is_err());
    }

    proptest! {
        #[test]
        fn interpolation_never_jumps_more_than_gap_endpoints(
            track in prop::collection::vec(prop_oneof![Just(0.0), 80.0f64..350.0], 2..120)
        ) {
            if let Some(l) = interpolate_log_f0(&track) {
                prop_assert_eq!(l.len(), track.len());
                let voiced: Vec<usize> = (0..track.len()).filter(|&i| track[i] > 0.0).collect();
                for w in voiced.windows(2) {
                    let bound = (track[w[1]].ln() - track[w[0]].ln()).abs() + 1e-12;
                    for i in w[0]..w[1] {
                        prop_assert!((l[i + 1] - l[i]).abs() <= bound);
                    }
                }
            }
        }
    }
}
