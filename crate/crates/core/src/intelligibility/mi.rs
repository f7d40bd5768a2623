use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Shortest sequence accepted by [`mutual_information_gc`].
const MIN_LEN: usize = 64;
const MAX_RHO2: f64 = 1.0 - 1e-9;

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn normal_scores(x: &[f64]) -> Vec<f64> {
    let n = Normal::standard();
    let len = x.len() as f64;
    ranks(x).into_iter().map(|r| n.inverse_cdf(r / (len + 1.0))).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Copula MI without the minimum-length check; constant inputs give `None`.
pub(crate) fn gc_mi(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return None;
    }
    let rho = pearson(&normal_scores(x), &normal_scores(y))?;
    Some((-0.5 * (1.0 - (rho * rho).min(MAX_RHO2)).ln()).max(0.0))
}

/// Gaussian-copula mutual information in nats: both sequences are mapped
/// to normal scores through their ranks, then `-0.5 ln(1 - rho^2)` of the
/// scores' Pearson correlation.
pub fn mutual_information_gc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < MIN_LEN {
        return Err(Error::invalid(format!("need at least {MIN_LEN} samples, got {}", x.len())));
    }
    gc_mi(x, y).ok_or_else(|| Error::invalid("constant input has no copula"))
}
