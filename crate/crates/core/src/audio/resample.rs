use std::f64::consts::PI;

const HALF_TAPS: isize = 24;

/// Band-limited resampling with a Blackman-windowed sinc kernel.
pub fn resample(x: &[f64], from_hz: u32, to_hz: u32) -> Vec<f64> {
    if from_hz == to_hz || x.is_empty() {
        return x.to_vec();
    }
    let ratio = to_hz as f64 / from_hz as f64;
    let out_len = ((x.len() as f64) * ratio).round().max(1.0) as usize;
    // low-pass at the lower of the two Nyquist rates
    let cutoff = ratio.min(1.0);
    let half = (HALF_TAPS as f64 / cutoff).ceil() as isize;
    (0..out_len)
        .map(|n| {
            let t = n as f64 / ratio;
            let centre = t.floor() as isize;
            let mut acc = 0.0;
            for k in (centre - half + 1)..=(centre + half) {
                if k < 0 || k as usize >= x.len() {
                    continue;
                }
                let d = t - k as f64;
                let u = d / (half as f64);
                if u.abs() >= 1.0 {
                    continue;
                }
                let window = 0.42 + 0.5 * (PI * u).cos() + 0.08 * (2.0 * PI * u).cos();
                acc += x[k as usize] * cutoff * sinc(cutoff * d) * window;
            }
            acc
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_low_frequency_tone() {
        let x: Vec<f64> = (0..48000)
            .map(|n| (2.0 * PI * 440.0 * n as f64 / 48000.0).sin())
            .collect();
        let y = resample(&x, 48000, 16000);
        assert_eq!(y.len(), 16000);
        let err = (1000..15000)
            .map(|n| (y[n] - (2.0 * PI * 440.0 * n as f64 / 16000.0).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "max error {err}");
    }

    #[test]
    fn identity_when_rates_match() {
        let x = vec![0.1, 0.2, 0.3];
        assert_eq!(resample(&x, 16000, 16000), x);
    }
}
