use serde::{Deserialize, Serialize};

use super::embedding::{SpeakerTable, EMBEDDING_DIM};
use super::model::ConditioningMode;
use crate::corpus::Style;
use crate::features::AcousticFrameFeatures;
use crate::nn::Mat;
use crate::{Error, Result};

const STD_FLOOR: f64 = 1e-3;

/// Per-bin log-mel mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl MelNorm {
    pub fn identity(bins: usize) -> Self {
        Self { mean: vec![0.0; bins], std: vec![1.0; bins] }
    }

    pub fn fit<'a>(mels: impl IntoIterator<Item = &'a Mat>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum: Option<(Vec<f64>, Vec<f64>)> = None;
        for m in mels {
            let (s, sq) = sum.get_or_insert_with(|| (vec![0.0; m.ncols()], vec![0.0; m.ncols()]));
            if m.ncols() != s.len() {
                return Err(Error::invalid("mel matrices differ in bin count"));
            }
            for row in m.rows() {
                for (b, v) in row.iter().enumerate() {
                    s[b] += v;
                    sq[b] += v * v;
                }
            }
            n += m.nrows();
        }
        let (s, sq) = sum.filter(|_| n > 0).ok_or_else(|| Error::invalid("no frames to fit normalisation"))?;
        let mean: Vec<f64> = s.iter().map(|v| v / n as f64).collect();
        let std = sq.iter().zip(&mean).map(|(q, m)| (q / n as f64 - m * m).max(0.0).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn bins(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, m: &Mat) -> Mat {
        let mut out = m.clone();
        for mut row in out.rows_mut() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[b]) / self.std[b];
            }
        }
        out
    }

    pub fn normalize_rows(&self, rows: &[Vec<f64>]) -> Mat {
        self.normalize(&rows_to_mat(rows))
    }

    pub fn denormalize(&self, m: &Mat) -> Vec<Vec<f64>> {
        m.rows()
            .into_iter()
            .map(|row| row.iter().enumerate().map(|(b, v)| v * self.std[b] + self.mean[b]).collect())
            .collect()
    }
}

pub fn rows_to_mat(rows: &[Vec<f64>]) -> Mat {
    let cols = rows.first().map_or(0, Vec::len);
    Mat::from_shape_fn((rows.len(), cols), |(r, c)| rows[r][c])
}

/// Precomputed inputs and targets for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub utt_id: String,
    pub speaker_id: String,
    pub style: Style,
    /// Frames x bins natural-log mel.
    pub mel: Mat,
    pub phonemes: Vec<usize>,
    pub features: AcousticFrameFeatures,
}

impl TrainingExample {
    pub fn frames(&self) -> usize {
        self.mel.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.frames();
        if self.phonemes.len() != t || self.features.len() != t {
            return Err(Error::data(format!(
                "{}: {} mel frames, {} phoneme frames, {} feature frames",
                self.utt_id,
                t,
                self.phonemes.len(),
                self.features.len()
            )));
        }
        Ok(())
    }
}

/// Row-stacked minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub segs: Vec<usize>,
    /// Normalised log-mel rows.
    pub mel: Mat,
    pub phonemes: Vec<usize>,
    /// One speaker row per segment.
    pub spk: Mat,
    pub cond: Option<Mat>,
    /// 1 for Lombard, 0 for neutral, one per segment.
    pub styles: Vec<f64>,
}

impl Batch {
    /// Stacks `(example, first frame, frame count)` windows.
    pub fn assemble(
        items: &[(&TrainingExample, usize, usize)],
        norm: &MelNorm,
        mode: ConditioningMode,
        speakers: &SpeakerTable,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let rows: usize = items.iter().map(|i| i.2).sum();
        let mut mel = Mat::zeros((rows, norm.bins()));
        let mut cond = (mode != ConditioningMode::None).then(|| Mat::zeros((rows, mode.channels().len())));
        let mut spk = Mat::zeros((items.len(), EMBEDDING_DIM));
        let mut phonemes = Vec::with_capacity(rows);
        let mut segs = Vec::with_capacity(items.len());
        let mut styles = Vec::with_capacity(items.len());
        let mut r = 0;
        for (s, &(ex, start, len)) in items.iter().enumerate() {
            if len == 0 || start + len > ex.frames() {
                return Err(Error::invalid(format!("window {start}+{len} outside {}", ex.utt_id)));
            }
            let e = speakers
                .get(&ex.speaker_id)
                .ok_or_else(|| Error::data(format!("no embedding for speaker {}", ex.speaker_id)))?;
            spk.row_mut(s).assign(&ndarray::ArrayView1::from(&e.vector));
            let window = ex.mel.slice(ndarray::s![start..start + len, ..]).to_owned();
            mel.slice_mut(ndarray::s![r..r + len, ..]).assign(&norm.normalize(&window));
            if let Some(c) = cond.as_mut() {
                for t in 0..len {
                    for (j, &ch) in mode.channels().iter().enumerate() {
                        c[[r + t, j]] = ex.features.frames[start + t][ch];
                    }
                }
            }
            phonemes.extend_from_slice(&ex.phonemes[start..start + len]);
            segs.push(len);
            styles.push(super::losses::style_target(ex.style));
            r += len;
        }
        Ok(Self { segs, mel, phonemes, spk, cond, styles })
    }
}
