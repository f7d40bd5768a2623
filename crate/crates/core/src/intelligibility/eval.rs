use std::fs;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{siib, SiibConfig};
use crate::audio::{mix_at_snr, speech_shaped_noise, Ltas, NoiseCondition, Waveform};
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const REPORT_HEADER: &str = "system\tsnr_db\tmean_oi\tci95\tn";

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub waveform: Waveform,
}

/// Mean objective intelligibility of one system at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub system: String,
    pub snr_db: f64,
    pub mean_oi: f64,
    /// Half-width of the 95% t-interval over utterances.
    pub ci95: f64,
    pub n: usize,
    /// Per-utterance scores in utterance-id order.
    pub scores: Vec<(String, f64)>,
}

impl EvalRow {
    pub fn from_scores(system: &str, snr_db: f64, scores: Vec<(String, f64)>) -> Result<Self> {
        let n = scores.len();
        if n < 2 {
            return Err(Error::invalid(format!("a confidence interval needs at least 2 utterances, got {n}")));
        }
        let mean = scores.iter().map(|s| s.1).sum::<f64>() / n as f64;
        let var = scores.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map_err(|e| Error::invalid(e.to_string()))?
            .inverse_cdf(0.975);
        Ok(Self { system: system.to_string(), snr_db, mean_oi: mean, ci95: t * (var / n as f64).sqrt(), n, scores })
    }

    pub fn tsv_line(&self) -> String {
        format!("{}\t{}\t{:.4}\t{:.4}\t{}", self.system, self.snr_db, self.mean_oi, self.ci95, self.n)
    }
}

fn sorted(set: &[Utterance]) -> Vec<&Utterance> {
    let mut v: Vec<&Utterance> = set.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

/// Scores every processed utterance, mixed with speech-shaped noise at the
/// condition's SNR, against its clean reference. Each utterance's noise is
/// seeded from the condition seed and the utterance id, so rows do not
/// depend on set order.
pub fn evaluate_condition(
    system: &str,
    clean: &[Utterance],
    processed: &[Utterance],
    cond: &NoiseCondition,
    ltas: &Ltas,
    cfg: &SiibConfig,
) -> Result<EvalRow> {
    let (c, p) = (sorted(clean), sorted(processed));
    if c.len() != p.len() || c.iter().zip(&p).any(|(a, b)| a.id != b.id) {
        return Err(Error::invalid("clean and processed sets do not contain the same utterance ids"));
    }
    if c.len() < 2 {
        return Err(Error::invalid("evaluation needs at least 2 utterances"));
    }
    let mut scores = Vec::with_capacity(c.len());
    for (c, p) in c.iter().zip(&p) {
        let w = &p.waveform;
        let noise = speech_shaped_noise(ltas, w.duration_s(), derive_seed(cond.seed, &p.id), w.sample_rate())?;
        let mixed = mix_at_snr(w, &noise, cond.snr_db)?;
        scores.push((c.id.clone(), siib(&c.waveform, &mixed, cfg)?.bits_per_second));
    }
    EvalRow::from_scores(system, cond.snr_db, scores)
}

pub fn write_report(path: impl AsRef<Path>, rows: &[EvalRow]) -> Result<()> {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.tsv_line());
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Reads `(system, snr_db, mean_oi, ci95, n)` rows back; per-utterance
/// scores are not part of the report.
pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<EvalRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err(Error::format(path, "missing report header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            let bad = || Error::format(path, format!("bad report row '{l}'"));
            if c.len() != 5 {
                return Err(bad());
            }
            Ok(EvalRow {
                system: c[0].to_string(),
                snr_db: c[1].parse().map_err(|_| bad())?,
                mean_oi: c[2].parse().map_err(|_| bad())?,
                ci95: c[3].parse().map_err(|_| bad())?,
                n: c[4].parse().map_err(|_| bad())?,
                scores: Vec::new(),
            })
        })
        .collect()
}
