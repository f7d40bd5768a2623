use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::audio::MelSpectrogram;
use crate::rng::{normal, seeded};
use crate::{Error, Result};

pub const EMBEDDING_DIM: usize = 64;
const PROJECTION_SEED: u64 = 0x5eed_e4b0;

/// Unit-norm speaker identity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerEmbedding {
    pub speaker_id: String,
    pub vector: Vec<f64>,
}

impl SpeakerEmbedding {
    /// Normalises `vector` to unit length; a zero vector is degenerate.
    pub fn new(speaker_id: impl Into<String>, vector: Vec<f64>) -> Result<Self> {
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-12) || !norm.is_finite() {
            return Err(Error::Degenerate("embedding has zero or non-finite norm".into()));
        }
        Ok(Self { speaker_id: speaker_id.into(), vector: vector.into_iter().map(|v| v / norm).collect() })
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        self.vector.iter().zip(&other.vector).map(|(a, b)| a * b).sum()
    }
}

/// Spectral-signature embedding: per-bin mean and standard deviation of
/// the log-mel frames (the mean with its average over bins removed, so
/// overall level does not enter), projected by a fixed seeded orthonormal
/// map and normalised.
#[derive(Debug, Clone)]
pub struct EmbeddingProvider {
    projection: DMatrix<f64>,
    bins: usize,
}

impl EmbeddingProvider {
    pub fn new(mel_bins: usize) -> Self {
        let mut rng = seeded(PROJECTION_SEED);
        let gauss = DMatrix::from_fn(2 * mel_bins, EMBEDDING_DIM, |_, _| normal(&mut rng));
        let projection = gauss.qr().q();
        Self { projection, bins: mel_bins }
    }

    /// Embedding of the frames pooled over `mels`.
    pub fn embed(&self, speaker_id: &str, mels: &[&MelSpectrogram]) -> Result<SpeakerEmbedding> {
        let frames: usize = mels.iter().map(|m| m.frames()).sum();
        if frames == 0 {
            return Err(Error::invalid("speaker embedding needs at least one frame"));
        }
        if let Some(m) = mels.iter().find(|m| m.bins() != self.bins) {
            return Err(Error::invalid(format!("expected {} mel bins, got {}", self.bins, m.bins())));
        }
        let mut mean = vec![0.0; self.bins];
        let mut sq = vec![0.0; self.bins];
        for row in mels.iter().flat_map(|m| m.values()) {
            for (b, v) in row.iter().enumerate() {
                mean[b] += v;
                sq[b] += v * v;
            }
        }
        let n = frames as f64;
        let mut feat = Vec::with_capacity(2 * self.bins);
        let level = mean.iter().sum::<f64>() / (n * self.bins as f64);
        feat.extend(mean.iter().map(|m| m / n - level));
        feat.extend(mean.iter().zip(&sq).map(|(m, s)| (s / n - (m / n).powi(2)).max(0.0).sqrt()));
        let x = DMatrix::from_row_slice(1, feat.len(), &feat) * &self.projection;
        SpeakerEmbedding::new(speaker_id, x.iter().copied().collect())
    }
}

/// Mean of the embeddings renormalised to unit length.
pub fn centroid_embedding(embeddings: &[SpeakerEmbedding]) -> Result<SpeakerEmbedding> {
    let first = embeddings.first().ok_or_else(|| Error::invalid("centroid of no embeddings"))?;
    let dim = first.vector.len();
    if embeddings.iter().any(|e| e.vector.len() != dim) {
        return Err(Error::invalid("embeddings differ in dimension"));
    }
    let mut sum = vec![0.0; dim];
    for e in embeddings {
        sum.iter_mut().zip(&e.vector).for_each(|(s, v)| *s += v);
    }
    SpeakerEmbedding::new(first.speaker_id.clone(), sum.into_iter().map(|s| s / embeddings.len() as f64).collect())
        .map_err(|_| Error::Degenerate("centroid of the embeddings is the zero vector".into()))
}

/// Speaker id to embedding.
pub type SpeakerTable = BTreeMap<String, SpeakerEmbedding>;

/// Reads `speaker_id` followed by 64 tab-separated floats per line.
pub fn import_embeddings(path: impl AsRef<Path>) -> Result<SpeakerTable> {
    let path = path.as_ref();
    let mut table = SpeakerTable::new();
    for (n, line) in fs::read_to_string(path)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != EMBEDDING_DIM + 1 {
            return Err(Error::format(path, format!("line {}: expected {} columns", n + 1, EMBEDDING_DIM + 1)));
        }
        let v = cols[1..]
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
        table.insert(cols[0].to_string(), SpeakerEmbedding::new(cols[0], v)?);
    }
    if table.is_empty() {
        return Err(Error::format(path, "no embeddings"));
    }
    Ok(table)
}

pub fn export_embeddings(path: impl AsRef<Path>, table: &SpeakerTable) -> Result<()> {
    let mut s = String::new();
    for (id, e) in table {
        s.push_str(id);
        for v in &e.vector {
            s.push_str(&format!("\t{v}"));
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}
