use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Number of centred analysis frames for a signal of `len` samples.
pub fn frame_count(len: usize, hop: usize) -> usize {
    len.div_ceil(hop).max(1)
}

/// Maps an out-of-range index into `0..n` by mirror reflection (edge sample
/// not repeated), bouncing as often as needed.
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

/// Short-time Fourier transform with centred, reflection-padded framing.
///
/// Frame `t` is centred on sample `t * hop`; a signal of `len` samples yields
/// `ceil(len / hop)` frames. Spectra are normalised by the window sum so a
/// full-scale sinusoid of amplitude `A` peaks near `A / 2`.
#[derive(Clone)]
pub struct Stft {
    frame_len: usize,
    hop: usize,
    fft_size: usize,
    window: Vec<f64>,
    window_sum: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft")
            .field("frame_len", &self.frame_len)
            .field("hop", &self.hop)
            .field("fft_size", &self.fft_size)
            .finish()
    }
}

impl Stft {
    /// Periodic Hann analysis window.
    pub fn hann(frame_len: usize, hop: usize, fft_size: usize) -> Self {
        let window = (0..frame_len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / frame_len as f64).cos())
            .collect();
        Self::with_window(window, hop, fft_size)
    }

    pub fn with_window(window: Vec<f64>, hop: usize, fft_size: usize) -> Self {
        assert!(fft_size >= window.len(), "fft size smaller than frame");
        assert!(hop > 0);
        let mut planner = FftPlanner::new();
        let window_sum = window.iter().sum();
        Self {
            frame_len: window.len(),
            hop,
            fft_size,
            window,
            window_sum,
            forward: planner.plan_fft_forward(fft_size),
            inverse: planner.plan_fft_inverse(fft_size),
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Sample offset (possibly negative) of the first sample of frame `t`.
    pub fn frame_start(&self, t: usize) -> isize {
        (t * self.hop) as isize - (self.frame_len / 2) as isize
    }

    /// Extracts the reflection-padded, un-windowed samples of frame `t`.
    pub fn raw_frame(&self, x: &[f64], t: usize) -> Vec<f64> {
        let start = self.frame_start(t);
        (0..self.frame_len)
            .map(|n| x[reflect_index(start + n as isize, x.len())])
            .collect()
    }

    /// Complex half-spectra, one per frame.
    pub fn analyze(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        let frames = frame_count(x.len(), self.hop);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_size];
        (0..frames)
            .map(|t| {
                let raw = self.raw_frame(x, t);
                self.spectrum_into(&raw, &mut buf);
                buf[..self.bins()].to_vec()
            })
            .collect()
    }

    /// Magnitude half-spectra, one per frame.
    pub fn magnitudes(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.analyze(x)
            .into_iter()
            .map(|f| f.iter().map(|c| c.norm()).collect())
            .collect()
    }

    /// Windowed, normalised spectrum of one raw frame.
    pub fn spectrum(&self, raw: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_size];
        self.spectrum_into(raw, &mut buf);
        buf.truncate(self.bins());
        buf
    }

    fn spectrum_into(&self, raw: &[f64], buf: &mut [Complex64]) {
        let norm = 1.0 / self.window_sum;
        for (n, slot) in buf.iter_mut().enumerate() {
            *slot = if n < self.frame_len {
                Complex64::new(raw[n] * self.window[n] * norm, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        self.forward.process(buf);
    }

    /// Inverse of one half-spectrum produced by [`Stft::spectrum`]: returns
    /// the first `frame_len` time samples, still carrying the analysis window.
    pub fn inverse_frame(&self, half: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_size];
        self.inverse_frame_into(half, &mut buf);
        buf[..self.frame_len].iter().map(|c| c.re).collect()
    }

    fn inverse_frame_into(&self, half: &[Complex64], buf: &mut [Complex64]) {
        let n = self.fft_size;
        let bins = self.bins();
        buf[..bins].copy_from_slice(&half[..bins]);
        // Hermitian extension; DC and Nyquist must be real.
        buf[0].im = 0.0;
        if n % 2 == 0 {
            buf[n / 2].im = 0.0;
        }
        for k in 1..n.div_ceil(2) {
            buf[n - k] = half[k].conj();
        }
        self.inverse.process(buf);
        // undo the FFT size factor and the analysis normalisation
        let scale = self.window_sum / n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    /// Weighted overlap-add resynthesis of `len` samples from half-spectra.
    /// Uses the analysis window again as synthesis window and normalises by
    /// the summed squared window, so `synthesize(analyze(x))` reproduces `x`.
    pub fn synthesize(&self, frames: &[Vec<Complex64>], len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        let mut wsum = vec![0.0; len];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_size];
        for (t, frame) in frames.iter().enumerate() {
            self.inverse_frame_into(frame, &mut buf);
            let start = self.frame_start(t);
            for n in 0..self.frame_len {
                let i = start + n as isize;
                if i < 0 || i as usize >= len {
                    continue;
                }
                let w = self.window[n];
                out[i as usize] += buf[n].re * w;
                wsum[i as usize] += w * w;
            }
        }
        for (o, w) in out.iter_mut().zip(&wsum) {
            if *w > 1e-8 {
                *o /= w;
            } else {
                *o = 0.0;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_bounces() {
        assert_eq!(reflect_index(-1, 5), 1);
        assert_eq!(reflect_index(-3, 5), 3);
        assert_eq!(reflect_index(5, 5), 3);
        assert_eq!(reflect_index(9, 5), 1);
        assert_eq!(reflect_index(2, 5), 2);
        assert_eq!(reflect_index(7, 1), 0);
    }

    #[test]
    fn analysis_synthesis_is_perfect_reconstruction() {
        let stft = Stft::hann(800, 200, 1024);
        let x: Vec<f64> = (0..5000).map(|n| ((n * 7919) % 101) as f64 / 100.0 - 0.5).collect();
        let y = stft.synthesize(&stft.analyze(&x), x.len());
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "max error {err}");
    }

    #[test]
    fn sine_peak_is_half_amplitude() {
        let stft = Stft::hann(800, 200, 1024);
        // 500 Hz sits exactly on bin 32
        let x: Vec<f64> = (0..4000)
            .map(|n| 0.8 * (2.0 * PI * 500.0 * n as f64 / 16000.0).sin())
            .collect();
        let mags = stft.magnitudes(&x);
        assert!((mags[10][32] - 0.4).abs() < 1e-3);
    }
}
