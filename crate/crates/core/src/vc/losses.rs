use crate::corpus::Style;
use crate::nn::{bce_value, Mat};
use crate::{Error, Result};

pub const BETA_KL: f64 = 1e-3;
pub const LAMBDA_S: f64 = 1.0;

/// Mean absolute elementwise difference.
pub fn l1_reconstruction_loss(pred: &Mat, target: &Mat) -> Result<f64> {
    if pred.dim() != target.dim() {
        return Err(Error::invalid(format!("shape mismatch: {:?} vs {:?}", pred.dim(), target.dim())));
    }
    Ok(pred.iter().zip(target).map(|(a, b)| (a - b).abs()).sum::<f64>() / pred.len() as f64)
}

/// Mean over latent elements of `0.5 (mu^2 + exp(logvar) - 1 - logvar)`.
pub fn kl_loss(mu: &Mat, logvar: &Mat) -> Result<f64> {
    if mu.dim() != logvar.dim() {
        return Err(Error::invalid("mu and logvar differ in shape"));
    }
    if mu.iter().chain(logvar).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite latent statistics"));
    }
    Ok(mu.iter().zip(logvar).map(|(m, l)| 0.5 * (m * m + l.exp() - 1.0 - l)).sum::<f64>() / mu.len() as f64)
}

/// Binary cross-entropy with Lombard as the positive class.
pub fn style_reconstruction_loss(p: f64, label: Style) -> f64 {
    bce_value(p, style_target(label))
}

pub fn style_target(s: Style) -> f64 {
    match s {
        Style::Lombard => 1.0,
        Style::Neutral => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBundle {
    pub l_rec: f64,
    pub l_kl: f64,
    pub l_s: Option<f64>,
    pub beta_kl: f64,
    pub lambda_s: f64,
    pub total: f64,
}

impl LossBundle {
    pub fn new(l_rec: f64, l_kl: f64, l_s: Option<f64>, beta_kl: f64, lambda_s: f64) -> Self {
        let total = l_rec + beta_kl * l_kl + l_s.map_or(0.0, |s| lambda_s * s);
        Self { l_rec, l_kl, l_s, beta_kl, lambda_s, total }
    }
}
