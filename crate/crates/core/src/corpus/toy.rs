use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;

use super::alignment::{PhonemeAlignment, PhonemeSegment, SILENCE};
use super::manifest::{Manifest, Style, UtteranceRecord};
use crate::audio::{band_weight, filter_whole, write_wav, WavFormat, Waveform, SAMPLE_RATE};
use crate::rng::{derive_seed, normal, seeded, SeededRng};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyCorpusConfig {
    pub speakers: usize,
    pub utterances_per_style: usize,
}

impl Default for ToyCorpusConfig {
    fn default() -> Self {
        Self { speakers: 4, utterances_per_style: 10 }
    }
}

/// Vowels with (F1, F2, F3) in Hz for an unscaled voice.
const VOWELS: [(&str, [f64; 3]); 5] = [
    ("aa", [730.0, 1090.0, 2440.0]),
    ("iy", [270.0, 2290.0, 3010.0]),
    ("uw", [300.0, 870.0, 2240.0]),
    ("eh", [530.0, 1840.0, 2480.0]),
    ("ao", [570.0, 840.0, 2410.0]),
];

/// Fricatives with their noise pass band in Hz.
const FRICATIVES: [(&str, [f64; 2]); 3] = [("s", [4000.0, 7800.0]), ("sh", [2000.0, 4500.0]), ("f", [1000.0, 7800.0])];

const FORMANT_GAINS: [f64; 3] = [1.0, 0.5, 0.25];
const FORMANT_BW: [f64; 3] = [90.0, 110.0, 150.0];
const SILENCE_DBFS: f64 = -70.0;
const NEUTRAL_RMS: f64 = 0.05;
/// Block length over which harmonic amplitudes are held before interpolation.
const CONTROL_BLOCK: usize = 80;
const CROSSFADE_MS: f64 = 15.0;

#[derive(Debug, Clone, Copy)]
struct Voice {
    base_f0: f64,
    formant_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Sound {
    Silence,
    Vowel([f64; 3]),
    Fricative([f64; 2]),
}

fn voice(seed: u64, speaker: usize) -> Voice {
    let mut rng = seeded(derive_seed(seed, &format!("voice{speaker}")));
    // Alternate low and high voices so small corpora cover both ranges.
    let base_f0 = if speaker % 2 == 0 { rng.random_range(95.0..135.0) } else { rng.random_range(175.0..235.0) };
    let formant_scale = if speaker % 2 == 0 { rng.random_range(0.9..1.0) } else { rng.random_range(1.05..1.17) };
    Voice { base_f0, formant_scale }
}

/// Phoneme sequence and durations (ms) for sentence `index`; shared by all
/// speakers and both styles.
fn sentence(seed: u64, index: usize) -> Vec<(&'static str, Sound, f64)> {
    let mut rng = seeded(derive_seed(seed, &format!("sentence{index}")));
    let mut out = vec![(SILENCE, Sound::Silence, rng.random_range(120.0..200.0f64).round())];
    let n = rng.random_range(8..13);
    for i in 0..n {
        if i % 3 == 2 || (i > 0 && rng.random_bool(0.15)) {
            let (p, band) = FRICATIVES[rng.random_range(0..FRICATIVES.len())];
            out.push((p, Sound::Fricative(band), rng.random_range(70.0..130.0f64).round()));
        } else {
            let (p, f) = VOWELS[rng.random_range(0..VOWELS.len())];
            out.push((p, Sound::Vowel(f), rng.random_range(110.0..210.0f64).round()));
        }
    }
    out.push((SILENCE, Sound::Silence, rng.random_range(120.0..200.0f64).round()));
    out
}

fn formant_envelope(formants: &[f64; 3], scale: f64, hz: f64) -> f64 {
    let mut e = 0.01;
    for i in 0..3 {
        let d = (hz - formants[i] * scale) / (FORMANT_BW[i] * scale);
        e += FORMANT_GAINS[i] / (1.0 + d * d);
    }
    e
}

/// Per-sample crossfade weights for each segment.
fn segment_weights(bounds: &[(usize, usize)], len: usize) -> Vec<Vec<f64>> {
    let fade = (CROSSFADE_MS * SAMPLE_RATE as f64 / 1000.0) as f64;
    bounds
        .iter()
        .map(|&(a, b)| {
            (0..len)
                .map(|i| {
                    let t = i as f64 + 0.5;
                    let up = ((t - a as f64) / fade + 0.5).clamp(0.0, 1.0);
                    let down = ((b as f64 - t) / fade + 0.5).clamp(0.0, 1.0);
                    up.min(down)
                })
                .collect()
        })
        .collect()
}

/// Synthesises one utterance of harmonic pseudo-speech and its alignment.
///
/// Lombard renditions raise f0 by 20%, flatten the source tilt, add 6 dB
/// between 1 and 3 kHz and are 6 dB louder; timing and phonemes are the
/// same as the neutral rendition of the same sentence.
pub fn synth_toy_utterance(seed: u64, speaker: usize, style: Style, index: usize) -> Result<(Waveform, PhonemeAlignment)> {
    let v = voice(seed, speaker);
    let sent = sentence(seed, index);
    let fs = SAMPLE_RATE as f64;
    let mut rng: SeededRng = seeded(derive_seed(seed, &format!("utt{speaker}/{style}/{index}")));

    let mut bounds = Vec::new();
    let mut segments = Vec::new();
    let mut t_ms = 0.0;
    for &(p, _, d) in &sent {
        let a = (t_ms * fs / 1000.0) as usize;
        let b = ((t_ms + d) * fs / 1000.0) as usize;
        bounds.push((a, b));
        segments.push(PhonemeSegment { phoneme: p.to_string(), start_ms: t_ms, end_ms: t_ms + d });
        t_ms += d;
    }
    let len = bounds.last().unwrap().1;
    let weights = segment_weights(&bounds, len);

    let lombard = style == Style::Lombard;
    let f0_scale = if lombard { 1.2 } else { 1.0 };
    let tilt = if lombard { 0.7 } else { 1.3 };
    let contour_phase = rng.random_range(0.0..2.0 * PI);
    let f0_at = |i: usize| {
        let t = i as f64 / fs;
        let total = len as f64 / fs;
        // Gentle declination plus a slow wobble.
        v.base_f0 * f0_scale * (1.08 - 0.16 * t / total + 0.04 * (2.0 * PI * 1.5 * t + contour_phase).sin())
    };

    // Voiced part: harmonic bank with block-wise amplitudes.
    let vowel_amp = |i: usize, hz: f64| -> f64 {
        sent.iter()
            .zip(&weights)
            .map(|(&(_, s, _), w)| match s {
                Sound::Vowel(f) if w[i] > 0.0 => w[i] * formant_envelope(&f, v.formant_scale, hz),
                _ => 0.0,
            })
            .sum()
    };
    let max_harm = (7600.0 / (v.base_f0 * f0_scale * 0.85)) as usize;
    let mut phase = 0.0;
    let mut voiced = vec![0.0; len];
    let mut prev_amps: Option<Vec<f64>> = None;
    let mut block_start = 0;
    while block_start < len {
        let block_end = (block_start + CONTROL_BLOCK).min(len);
        let f0 = f0_at(block_start);
        let amps: Vec<f64> = (1..=max_harm)
            .map(|k| {
                let hz = k as f64 * f0;
                if hz > 7600.0 {
                    0.0
                } else {
                    (k as f64).powf(-tilt) * vowel_amp(block_start, hz)
                }
            })
            .collect();
        let start_amps = prev_amps.take().unwrap_or_else(|| amps.clone());
        for i in block_start..block_end {
            let frac = (i - block_start) as f64 / CONTROL_BLOCK as f64;
            phase += 2.0 * PI * f0_at(i) / fs;
            let mut s = 0.0;
            for (k, (a0, a1)) in start_amps.iter().zip(&amps).enumerate() {
                let a = a0 + (a1 - a0) * frac;
                if a > 1e-6 {
                    s += a * ((k + 1) as f64 * phase).sin();
                }
            }
            voiced[i] = s;
        }
        prev_amps = Some(amps);
        block_start = block_end;
    }

    // Frication: one white source per utterance, band-limited per phoneme.
    let white: Vec<f64> = (0..len).map(|_| normal(&mut rng)).collect();
    let mut fric = vec![0.0; len];
    let mut bands_done: Vec<[f64; 2]> = Vec::new();
    for &(_, s, _) in &sent {
        let Sound::Fricative(band) = s else { continue };
        if bands_done.contains(&band) {
            continue;
        }
        bands_done.push(band);
        let shaped = filter_whole(&white, SAMPLE_RATE, |hz| band_weight(hz, band[0], band[1], 400.0));
        for ((&(_, s2, _), w), _) in sent.iter().zip(&weights).zip(0..) {
            if s2 == s {
                for i in 0..len {
                    fric[i] += w[i] * shaped[i];
                }
            }
        }
    }

    let voiced_rms = crate::audio::rms(&voiced).max(1e-12);
    let fric_rms = crate::audio::rms(&fric).max(1e-12);
    let mut x: Vec<f64> = voiced.iter().zip(&fric).map(|(a, b)| a / voiced_rms + 0.35 * b / fric_rms).collect();
    if lombard {
        x = filter_whole(&x, SAMPLE_RATE, |hz| 1.0 + band_weight(hz, 1000.0, 3000.0, 500.0));
    }
    let target = if lombard { 2.0 * NEUTRAL_RMS } else { NEUTRAL_RMS };
    crate::audio::match_rms(&mut x, target);
    let floor = 10f64.powf(SILENCE_DBFS / 20.0);
    for s in x.iter_mut() {
        *s += floor * normal(&mut rng);
    }
    Ok((Waveform::new(x, SAMPLE_RATE)?, PhonemeAlignment::new(segments)?))
}

/// Writes `<out>/<speaker>/<style>/<speaker>_<style>_<nnn>.{wav,lab}` for
/// every speaker, style and sentence index, then returns the manifest.
/// Speakers are named `s1`, `s2`, ...
pub fn synth_toy_corpus(cfg: &ToyCorpusConfig, seed: u64, out: impl AsRef<Path>) -> Result<Manifest> {
    let out = out.as_ref();
    let mut records = Vec::new();
    for spk in 0..cfg.speakers {
        let speaker_id = format!("s{}", spk + 1);
        for style in Style::ALL {
            let dir = out.join(&speaker_id).join(style.as_str());
            fs::create_dir_all(&dir)?;
            for idx in 0..cfg.utterances_per_style {
                let utt_id = format!("{speaker_id}_{style}_{idx:03}");
                let (w, a) = synth_toy_utterance(seed, spk, style, idx)?;
                let wav_path = dir.join(format!("{utt_id}.wav"));
                let alignment_path = dir.join(format!("{utt_id}.lab"));
                write_wav(&wav_path, &w, WavFormat::Pcm16)?;
                a.write_lab(&alignment_path)?;
                records.push(UtteranceRecord { utt_id, speaker_id: speaker_id.clone(), style, wav_path, alignment_path });
            }
        }
    }
    Manifest::new(records)
}
