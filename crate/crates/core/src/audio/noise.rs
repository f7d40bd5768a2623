use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{AnalysisConfig, Stft, Waveform};
use crate::{rng, Error, Result};

const LTAS_MAGIC: &[u8; 8] = b"LVCLTAS1";

/// RMS of generated speech-shaped noise.
pub const NOISE_RMS: f64 = 0.1;

/// Activity threshold for power measurement, in dB relative to full scale.
pub const ACTIVE_THRESHOLD_DBFS: f64 = -50.0;

/// Block length used to find the active support of a signal (20 ms at 16 kHz).
const ACTIVITY_BLOCK: usize = 320;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    SpeechShaped,
}

/// Masker specification for one evaluation condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCondition {
    pub snr_db: f64,
    pub noise_kind: NoiseKind,
    pub seed: u64,
}

impl NoiseCondition {
    pub fn speech_shaped(snr_db: f64, seed: u64) -> Self {
        Self { snr_db, noise_kind: NoiseKind::SpeechShaped, seed }
    }
}

/// Long-term average magnitude spectrum, `fft_size / 2 + 1` bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Ltas {
    bands: Vec<f64>,
}

impl Ltas {
    pub fn new(bands: Vec<f64>) -> Result<Self> {
        if bands.len() < 2 {
            return Err(Error::invalid("LTAS needs at least two bands"));
        }
        if bands.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::invalid("LTAS bands must be finite and non-negative"));
        }
        if !bands.iter().any(|&b| b > 0.0) {
            return Err(Error::invalid("LTAS has no energy"));
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[f64] {
        &self.bands
    }

    pub fn fft_size(&self) -> usize {
        (self.bands.len() - 1) * 2
    }

    /// Band levels in dB re. the peak band.
    pub fn relative_db(&self) -> Vec<f64> {
        let peak = self.bands.iter().cloned().fold(0.0, f64::max);
        self.bands.iter().map(|b| 20.0 * (b.max(1e-300) / peak).log10()).collect()
    }
}

/// Per-band mean magnitude over every analysis frame of every waveform.
pub fn compute_ltas(corpus: &[Waveform], cfg: &AnalysisConfig) -> Result<Ltas> {
    if corpus.is_empty() {
        return Err(Error::invalid("LTAS of an empty corpus"));
    }
    let stft = cfg.stft();
    let mut acc = vec![0.0; stft.bins()];
    let mut frames = 0usize;
    for w in corpus {
        for mag in stft.magnitudes(w.samples()) {
            acc.iter_mut().zip(&mag).for_each(|(a, m)| *a += m);
            frames += 1;
        }
    }
    acc.iter_mut().for_each(|a| *a /= frames as f64);
    Ltas::new(acc)
}

/// Synthesis blocks are this many times longer than the LTAS frame, so the
/// noise can carry spectral detail finer than one LTAS band.
const BLOCK_OVERSAMPLE: usize = 4;
/// Kernel half width in LTAS bands.
const SMEAR_HALF_WIDTH: usize = 12;
const DECONV_ITERATIONS: usize = 400;

fn sine_window(n: usize) -> Vec<f64> {
    (0..n).map(|i| (PI * (i as f64 + 0.5) / n as f64).sin()).collect()
}

/// Window that [`compute_ltas`] uses for this FFT size under the default
/// analysis; a full-length Hann window for other sizes.
fn analysis_window(n: usize) -> Vec<f64> {
    let cfg = AnalysisConfig::default();
    if cfg.fft_size == n {
        cfg.stft().window().to_vec()
    } else {
        (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
    }
}

fn power_spectrum(w: &[f64], len: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut buf: Vec<Complex64> = (0..len).map(|i| Complex64::new(w.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    planner.plan_fft_forward(len).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr()).collect()
}

/// Expected analysis power at offset `d` (in synthesis bins) from a unit line
/// in one synthesis bin: the sine-window synthesis and the analysis power
/// spectra convolved on a grid twice as fine as the synthesis bins.
fn smearing_kernel(block: usize, analysis: &[f64], half_width: usize) -> Vec<f64> {
    let len = 2 * block;
    let mut planner = FftPlanner::new();
    let s = power_spectrum(&sine_window(block), len, &mut planner);
    let w = power_spectrum(analysis, len, &mut planner);
    let mut k: Vec<f64> = (0..=half_width)
        .map(|d| (0..len).map(|j| s[j] * w[(2 * d + len - j) % len]).sum())
        .collect();
    let total = k[0] + 2.0 * k[1..].iter().sum::<f64>();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Filter magnitudes, one per synthesis bin, whose noise re-analyses to
/// `ltas`. Speech LTAS bands are analysis-smeared harmonic lines; noise built
/// from short blocks is smeared a second time and fills the valleys by up to
/// 10 dB. Synthesis runs on a finer grid and the target power is deconvolved
/// onto it with Richardson-Lucy iterations, which keep the power non-negative.
fn shaping_gains(ltas: &Ltas) -> Vec<f64> {
    let os = BLOCK_OVERSAMPLE;
    let bins = ltas.bands().len();
    let fine = os * (bins - 1) + 1;
    let h = (SMEAR_HALF_WIDTH * os) as isize;
    let kernel = smearing_kernel(os * ltas.fft_size(), &analysis_window(ltas.fft_size()), h as usize);
    // negative and above-Nyquist frequencies mirror back into range
    let fold = |f: isize| -> usize {
        let last = fine as isize - 1;
        let f = f.abs();
        (if f > last { 2 * last - f } else { f }) as usize
    };
    let forward = |p: &[f64]| -> Vec<f64> {
        (0..bins)
            .map(|k| (-h..=h).map(|d| kernel[d.unsigned_abs()] * p[fold((k * os) as isize + d)]).sum())
            .collect()
    };
    let adjoint = |r: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; fine];
        for (k, rk) in r.iter().enumerate() {
            for d in -h..=h {
                out[fold((k * os) as isize + d)] += kernel[d.unsigned_abs()] * rk;
            }
        }
        out
    };
    let target: Vec<f64> = ltas.bands().iter().map(|b| b * b).collect();
    let floor = 1e-30 * target.iter().cloned().fold(0.0, f64::max);
    let norm = adjoint(&vec![1.0; bins]);
    let mut p: Vec<f64> = (0..fine)
        .map(|f| {
            let (k, t) = (f / os, (f % os) as f64 / os as f64);
            let next = target[(k + 1).min(bins - 1)];
            (1.0 - t) * target[k] + t * next
        })
        .collect();
    for _ in 0..DECONV_ITERATIONS {
        let est = forward(&p);
        let ratio: Vec<f64> = target.iter().zip(&est).map(|(t, e)| t / e.max(floor)).collect();
        let back = adjoint(&ratio);
        for f in 0..fine {
            p[f] *= back[f] / norm[f].max(f64::MIN_POSITIVE);
        }
    }
    p.iter().map(|v| v.sqrt()).collect()
}

/// Seeded Gaussian noise shaped by `ltas`.
///
/// Blocks of fresh white noise, four LTAS frames long, are filtered in the
/// frequency domain, weighted by a sine window and overlap-added at 50 % (the
/// squared sine window sums to one, keeping the output stationary). Filter
/// gains are pre-compensated for spectral smearing so the noise re-analyses
/// to `ltas`. The result is scaled to [`NOISE_RMS`].
pub fn speech_shaped_noise(ltas: &Ltas, duration_s: f64, seed: u64, sample_rate: u32) -> Result<Waveform> {
    if !(duration_s > 0.0) {
        return Err(Error::invalid("noise duration must be positive"));
    }
    let len = (duration_s * sample_rate as f64).round() as usize;
    if len == 0 {
        return Err(Error::invalid("noise duration shorter than one sample"));
    }
    let n = BLOCK_OVERSAMPLE * ltas.fft_size();
    let hop = n / 2;
    let window = sine_window(n);
    let gains = shaping_gains(ltas);
    let stft = Stft::with_window(vec![1.0; n], hop, n);
    let mut rng = rng::seeded(seed);
    let mut out = vec![0.0; len + n];
    let blocks = (len + n).div_ceil(hop);
    for b in 0..blocks {
        let white: Vec<f64> = (0..n).map(|_| rng::normal(&mut rng)).collect();
        let spec: Vec<Complex64> = stft
            .spectrum(&white)
            .iter()
            .zip(&gains)
            .map(|(c, g)| c * g)
            .collect();
        let block = stft.inverse_frame(&spec);
        let start = b * hop;
        for i in 0..n {
            if start + i < out.len() {
                out[start + i] += block[i] * window[i];
            }
        }
    }
    // discard the ramp-in of the first half block
    let mut samples: Vec<f64> = out[hop..hop + len].to_vec();
    super::match_rms(&mut samples, NOISE_RMS);
    Waveform::new(samples, sample_rate)
}

/// Marks samples belonging to 20 ms blocks whose RMS reaches
/// [`ACTIVE_THRESHOLD_DBFS`]. Falls back to all samples when no block is
/// active but the signal is not digital silence.
pub fn active_mask(x: &[f64]) -> Result<Vec<bool>> {
    if x.iter().all(|&s| s == 0.0) {
        return Err(Error::CannotMeasurePower);
    }
    let threshold = 10f64.powf(ACTIVE_THRESHOLD_DBFS / 20.0);
    let mut mask = vec![false; x.len()];
    let mut any = false;
    for (block, m) in x.chunks(ACTIVITY_BLOCK).zip(mask.chunks_mut(ACTIVITY_BLOCK)) {
        if super::rms(block) >= threshold {
            m.iter_mut().for_each(|v| *v = true);
            any = true;
        }
    }
    if !any {
        mask.iter_mut().for_each(|v| *v = true);
    }
    Ok(mask)
}

fn masked_power(x: &[f64], mask: &[bool]) -> f64 {
    let (sum, n) = x
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v * v, n + 1));
    sum / n.max(1) as f64
}

fn tiled_segment(noise: &[f64], len: usize) -> Vec<f64> {
    noise.iter().cycle().take(len).copied().collect()
}

/// Noise gain realising `snr_db` against `speech`, with powers measured over
/// the speech's active support.
pub fn snr_gain(speech: &Waveform, noise: &Waveform, snr_db: f64) -> Result<f64> {
    if speech.sample_rate() != noise.sample_rate() {
        return Err(Error::invalid("speech and noise sample rates differ"));
    }
    let mask = active_mask(speech.samples())?;
    let seg = tiled_segment(noise.samples(), speech.len());
    let ps = masked_power(speech.samples(), &mask);
    let pn = masked_power(&seg, &mask);
    if pn <= 0.0 {
        return Err(Error::invalid("noise has no power over the speech support"));
    }
    Ok((ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `speech + g * noise`, with `g` from [`snr_gain`]. Noise shorter than the
/// speech is tiled.
pub fn mix_at_snr(speech: &Waveform, noise: &Waveform, snr_db: f64) -> Result<Waveform> {
    let g = snr_gain(speech, noise, snr_db)?;
    let seg = tiled_segment(noise.samples(), speech.len());
    let mixed = speech.samples().iter().zip(&seg).map(|(s, n)| s + g * n).collect();
    Waveform::new(mixed, speech.sample_rate())
}

/// Achieved SNR of `mixture - speech` against `speech` over the speech's
/// active support.
pub fn measured_snr_db(speech: &Waveform, mixture: &Waveform) -> Result<f64> {
    let mask = active_mask(speech.samples())?;
    let residual: Vec<f64> = mixture.samples().iter().zip(speech.samples()).map(|(m, s)| m - s).collect();
    Ok(10.0 * (masked_power(speech.samples(), &mask) / masked_power(&residual, &mask)).log10())
}

pub fn write_ltas(path: impl AsRef<Path>, ltas: &Ltas) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + 4 * ltas.bands.len());
    buf.extend_from_slice(LTAS_MAGIC);
    buf.extend_from_slice(&(ltas.bands.len() as u32).to_le_bytes());
    for b in &ltas.bands {
        buf.extend_from_slice(&(*b as f32).to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_ltas(path: impl AsRef<Path>) -> Result<Ltas> {
    let path = path.as_ref();
    let buf = fs::read(path)?;
    if buf.len() < 12 || &buf[..8] != LTAS_MAGIC {
        return Err(Error::format(path, "missing LVCLTAS1 header"));
    }
    let count = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    if buf.len() != 12 + 4 * count {
        return Err(Error::format(path, format!("expected {count} bands")));
    }
    let bands = buf[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ltas::new(bands).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white(len: usize, seed: u64) -> Waveform {
        let mut rng = rng::seeded(seed);
        Waveform::new((0..len).map(|_| 0.1 * rng::normal(&mut rng)).collect(), 16000).unwrap()
    }

    fn one_pole_lowpass(w: &Waveform, a: f64) -> Waveform {
        let mut y = 0.0;
        let s = w.samples().iter().map(|x| {
            y = (1.0 - a) * x + a * y;
            y
        });
        Waveform::new(s.collect(), 16000).unwrap()
    }

    fn ltas_of(w: &Waveform) -> Ltas {
        compute_ltas(std::slice::from_ref(w), &AnalysisConfig::default()).unwrap()
    }

    #[test]
    fn white_noise_ltas_is_flat() {
        let l = ltas_of(&white(160_000, 1));
        let inner = &l.bands()[1..l.bands().len() - 1];
        let max = inner.iter().cloned().fold(0.0, f64::max);
        let min = inner.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 3.0, "ratio {}", max / min);
    }

    #[test]
    fn duplicates_do_not_change_ltas() {
        let w = white(16000, 2);
        let one = ltas_of(&w);
        let two = compute_ltas(&[w.clone(), w], &AnalysisConfig::default()).unwrap();
        for (a, b) in one.bands().iter().zip(two.bands()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn lowpassed_noise_has_weaker_high_bands() {
        let l = ltas_of(&one_pole_lowpass(&white(160_000, 3), 0.9));
        let b = l.bands();
        let low: f64 = b[5..50].iter().sum::<f64>() / 45.0;
        let high: f64 = b[400..500].iter().sum::<f64>() / 100.0;
        assert!(high < low);
        assert!(b[450] < b[20]);
    }

    #[test]
    fn empty_corpus_is_invalid() {
        assert!(compute_ltas(&[], &AnalysisConfig::default()).is_err());
    }

    #[test]
    fn noise_is_seeded_and_sized() {
        let l = ltas_of(&one_pole_lowpass(&white(32000, 4), 0.8));
        let a = speech_shaped_noise(&l, 2.0, 7, 16000).unwrap();
        let b = speech_shaped_noise(&l, 2.0, 7, 16000).unwrap();
        let c = speech_shaped_noise(&l, 2.0, 8, 16000).unwrap();
        assert_eq!(a.len(), 32000);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.rms() - NOISE_RMS).abs() < 1e-12);
    }

    #[test]
    fn noise_reproduces_its_ltas() {
        let target = ltas_of(&one_pole_lowpass(&white(160_000, 5), 0.85));
        let noise = speech_shaped_noise(&target, 10.0, 11, 16000).unwrap();
        let got = ltas_of(&noise);
        let peak = target.bands().iter().cloned().fold(0.0, f64::max);
        let valid: Vec<usize> = (0..target.bands().len()).filter(|&k| target.bands()[k] > 0.01 * peak).collect();
        let diff: Vec<f64> = valid
            .iter()
            .map(|&k| 20.0 * (got.bands()[k] / target.bands()[k]).log10())
            .collect();
        let offset = diff.iter().sum::<f64>() / diff.len() as f64;
        let worst = diff.iter().map(|d| (d - offset).abs()).fold(0.0, f64::max);
        assert!(worst <= 2.0, "worst band deviation {worst} dB");
    }

    #[test]
    fn closed_form_gains() {
        let s = white(16000, 6);
        let n = s.clone();
        assert!((snr_gain(&s, &n, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((snr_gain(&s, &n, -3.0).unwrap() - 10f64.powf(0.15)).abs() < 1e-12);
        assert!((snr_gain(&s, &n, -1.0).unwrap() - 10f64.powf(0.05)).abs() < 1e-12);
        assert!((10f64.powf(0.15) - 1.4125).abs() < 1e-4);
        assert!((10f64.powf(0.05) - 1.1220).abs() < 1e-4);
    }

    #[test]
    fn achieved_snr_matches_request() {
        let mut rng = rng::seeded(9);
        for trial in 0..10u64 {
            let mut s = white(24000, 100 + trial).into_samples();
            // a silent gap so the active-support rule matters
            let gap_start = 4000 + rng::normal(&mut rng).abs() as usize * 100;
            s[gap_start..gap_start + 3200].iter_mut().for_each(|v| *v = 0.0);
            let speech = Waveform::new(s, 16000).unwrap();
            let noise = white(10000, 200 + trial);
            for snr in [-9.0, -6.0, -3.0, -1.0, 0.0, 5.0] {
                let mix = mix_at_snr(&speech, &noise, snr).unwrap();
                let got = measured_snr_db(&speech, &mix).unwrap();
                assert!((got - snr).abs() <= 0.01, "requested {snr}, got {got}");
            }
        }
    }

    #[test]
    fn silent_speech_cannot_be_measured() {
        let s = Waveform::silence(1000, 16000).unwrap();
        let n = white(1000, 1);
        assert!(matches!(mix_at_snr(&s, &n, 0.0), Err(Error::CannotMeasurePower)));
    }

    #[test]
    fn ltas_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.ltas");
        let l = Ltas::new(vec![0.5, 0.25, 1.0]).unwrap();
        write_ltas(&p, &l).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..8], b"LVCLTAS1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(read_ltas(&p).unwrap(), l);
    }
}
