use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{Batch, MelNorm};
use super::embedding::{SpeakerEmbedding, EMBEDDING_DIM};
use crate::audio::{reflect_index, AnalysisConfig, MelSpectrogram};
use crate::corpus::PhonemeVocab;
use crate::features::AcousticFrameFeatures;
use crate::nn::{Graph, Init, Mat, ParamStore, Var};
use crate::rng::{normal, SeededRng};
use crate::{Error, Result};

/// Which acoustic feature channels the decoder receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditioningMode {
    None,
    F0,
    Mgc,
    F0Mgc,
}

impl ConditioningMode {
    pub const ALL: [ConditioningMode; 4] =
        [ConditioningMode::None, ConditioningMode::F0, ConditioningMode::Mgc, ConditioningMode::F0Mgc];

    /// Indices into the `[logf0, voicing, mgc0, mgc1]` feature frame.
    pub fn channels(self) -> &'static [usize] {
        match self {
            ConditioningMode::None => &[],
            ConditioningMode::F0 => &[0, 1],
            ConditioningMode::Mgc => &[2, 3],
            ConditioningMode::F0Mgc => &[0, 1, 2, 3],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConditioningMode::None => "none",
            ConditioningMode::F0 => "f0",
            ConditioningMode::Mgc => "mgc",
            ConditioningMode::F0Mgc => "f0mgc",
        }
    }

    /// Frames x channels matrix of the selected feature channels.
    pub fn select(self, feats: &AcousticFrameFeatures) -> Mat {
        let ch = self.channels();
        Mat::from_shape_fn((feats.len(), ch.len()), |(t, c)| feats.frames[t][ch[c]])
    }
}

impl fmt::Display for ConditioningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditioningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown conditioning mode '{s}' (none, f0, mgc, f0mgc)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mel_bins: usize,
    pub latent_dim: usize,
    pub downsample: usize,
    pub phoneme_embedding: usize,
    pub phoneme_context: usize,
    pub reference_hidden: usize,
    pub decoder_hidden: usize,
    pub cond_projection: usize,
    pub reference_kernel: usize,
    pub phoneme_kernel: usize,
    pub decoder_kernel: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mel_bins: 80,
            latent_dim: 8,
            downsample: 8,
            phoneme_embedding: 64,
            phoneme_context: 64,
            reference_hidden: 128,
            decoder_hidden: 128,
            cond_projection: 16,
            reference_kernel: 3,
            phoneme_kernel: 5,
            decoder_kernel: 3,
        }
    }
}

impl ModelConfig {
    /// Width of the phoneme encoding: context features plus the speaker vector.
    pub fn phoneme_dim(&self) -> usize {
        self.phoneme_context + EMBEDDING_DIM
    }
}

/// Reference-encoder output at `ceil(frames / downsample)` rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSeq {
    pub mu: Mat,
    pub logvar: Mat,
    pub sample: Mat,
}

/// Graph handles of one reconstruction pass.
pub(crate) struct Recon {
    pub target: Var,
    pub pred: Var,
    pub mu: Var,
    pub logvar: Var,
}

/// Phoneme encoder, variational reference encoder and decoder. The decoder
/// predicts per-bin normalised log-mels; [`MelNorm`] maps them back.
#[derive(Debug, Clone)]
pub struct VcModel {
    pub config: ModelConfig,
    pub mode: ConditioningMode,
    pub vocab: PhonemeVocab,
    pub norm: MelNorm,
    pub params: ParamStore,
}

impl VcModel {
    pub fn new(config: ModelConfig, mode: ConditioningMode, vocab: PhonemeVocab, norm: MelNorm, seed: u64) -> Self {
        let c = &config;
        let mut p = ParamStore::new(seed);
        let ref_in = c.reference_kernel * (c.mel_bins + EMBEDDING_DIM);
        p.add("ref.conv.w", ref_in, c.reference_hidden, Init::Glorot);
        p.add("ref.conv.b", 1, c.reference_hidden, Init::Zeros);
        p.add("ref.out.w", c.reference_hidden, 2 * c.latent_dim, Init::Glorot);
        p.add("ref.out.b", 1, 2 * c.latent_dim, Init::Zeros);
        p.add("ph.emb", vocab.len(), c.phoneme_embedding, Init::Uniform(1.0));
        p.add("ph.conv.w", c.phoneme_kernel * c.phoneme_embedding, c.phoneme_context, Init::Glorot);
        p.add("ph.conv.b", 1, c.phoneme_context, Init::Zeros);
        let mut dec_in = c.phoneme_dim() + c.latent_dim + EMBEDDING_DIM;
        if mode != ConditioningMode::None {
            p.add("dec.cond.w", mode.channels().len(), c.cond_projection, Init::Glorot);
            p.add("dec.cond.b", 1, c.cond_projection, Init::Zeros);
            dec_in += c.cond_projection;
        }
        p.add("dec.in.w", dec_in, c.decoder_hidden, Init::Glorot);
        p.add("dec.in.b", 1, c.decoder_hidden, Init::Zeros);
        p.add("dec.conv.w", c.decoder_kernel * c.decoder_hidden, c.decoder_hidden, Init::Glorot);
        p.add("dec.conv.b", 1, c.decoder_hidden, Init::Zeros);
        p.add("dec.out.w", c.decoder_hidden, c.mel_bins, Init::Glorot);
        p.add("dec.out.b", 1, c.mel_bins, Init::Zeros);
        Self { config, mode, vocab, norm, params: p }
    }

    fn w(&self, g: &mut Graph, name: &str) -> Var {
        let id = self.params.id(name).unwrap_or_else(|| panic!("model has no parameter {name}"));
        g.param(&self.params, id)
    }

    fn dense(&self, g: &mut Graph, x: Var, layer: &str) -> Var {
        let (w, b) = (self.w(g, &format!("{layer}.w")), self.w(g, &format!("{layer}.b")));
        let y = g.matmul(x, w);
        g.add_row(y, b)
    }

    fn conv(&self, g: &mut Graph, x: Var, segs: &[usize], k: usize, layer: &str) -> Var {
        let u = g.unfold_segments(x, segs, k);
        self.dense(g, u, layer)
    }

    /// `mu` and `logvar` rows at the pooled rate, plus pooled segment lengths.
    pub(crate) fn graph_reference(&self, g: &mut Graph, mel: Var, spk: Var, segs: &[usize]) -> (Var, Var, Vec<usize>) {
        let s = g.expand_segments(spk, segs);
        let x = g.concat_cols(&[mel, s]);
        let h = self.conv(g, x, segs, self.config.reference_kernel, "ref.conv");
        let h = g.relu(h);
        let (pooled, lens) = g.avg_pool_time(h, segs, self.config.downsample);
        let out = self.dense(g, pooled, "ref.out");
        let l = self.config.latent_dim;
        (g.slice_cols(out, 0, l), g.slice_cols(out, l, 2 * l), lens)
    }

    pub(crate) fn graph_phonemes(&self, g: &mut Graph, ids: &[usize], spk: Var, segs: &[usize]) -> Var {
        let table = self.w(g, "ph.emb");
        let e = g.gather_rows(table, ids.to_vec());
        let h = self.conv(g, e, segs, self.config.phoneme_kernel, "ph.conv");
        let h = g.relu(h);
        let s = g.expand_segments(spk, segs);
        g.concat_cols(&[h, s])
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn graph_decode(
        &self,
        g: &mut Graph,
        phon: Var,
        z: Var,
        pooled: &[usize],
        spk: Var,
        cond: Option<Var>,
        segs: &[usize],
    ) -> Var {
        let up = g.upsample_repeat(z, pooled, segs, self.config.downsample);
        let s = g.expand_segments(spk, segs);
        let mut parts = vec![phon, up, s];
        if let Some(c) = cond {
            parts.push(self.dense(g, c, "dec.cond"));
        }
        let x = g.concat_cols(&parts);
        let h = self.dense(g, x, "dec.in");
        let h = g.relu(h);
        let c = self.conv(g, h, segs, self.config.decoder_kernel, "dec.conv");
        let c = g.relu(c);
        let h = g.add(h, c);
        self.dense(g, h, "dec.out")
    }

    /// Reconstruction pathway on a batch. With `eps` the latent is sampled
    /// as `mu + exp(logvar / 2) * eps`; without it the mean is used.
    pub(crate) fn graph_reconstruct(&self, g: &mut Graph, batch: &Batch, eps: Option<&Mat>) -> Recon {
        let target = g.constant(batch.mel.clone());
        let spk = g.constant(batch.spk.clone());
        let (mu, logvar, pooled) = self.graph_reference(g, target, spk, &batch.segs);
        let z = match eps {
            Some(e) => {
                let half = g.scale(logvar, 0.5);
                let sd = g.exp(half);
                let e = g.constant(e.clone());
                let noise = g.mul(sd, e);
                g.add(mu, noise)
            }
            None => mu,
        };
        let phon = self.graph_phonemes(g, &batch.phonemes, spk, &batch.segs);
        let cond = batch.cond.as_ref().map(|c| g.constant(c.clone()));
        let pred = self.graph_decode(g, phon, z, &pooled, spk, cond, &batch.segs);
        Recon { target, pred, mu, logvar }
    }

    /// Standard-normal draws for the latent rows of a batch.
    pub fn sample_eps(&self, batch: &Batch, rng: &mut SeededRng) -> Mat {
        let rows: usize = batch.segs.iter().map(|l| l.div_ceil(self.config.downsample)).sum();
        Mat::from_shape_simple_fn((rows, self.config.latent_dim), || normal(rng))
    }

    fn check_mel(&self, mel: &MelSpectrogram) -> Result<()> {
        if mel.bins() != self.config.mel_bins {
            return Err(Error::invalid(format!("expected {} mel bins, got {}", self.config.mel_bins, mel.bins())));
        }
        Ok(())
    }

    fn spk_row(spk: &SpeakerEmbedding) -> Result<Mat> {
        if spk.vector.len() != EMBEDDING_DIM {
            return Err(Error::invalid(format!("speaker embedding must have {EMBEDDING_DIM} values")));
        }
        Ok(Mat::from_shape_vec((1, EMBEDDING_DIM), spk.vector.clone()).expect("embedding shape"))
    }

    /// Latent sequence of one utterance. Mels shorter than the pooling
    /// factor are reflection-padded to it first. With `rng` the sample is
    /// drawn; otherwise it equals `mu`.
    pub fn encode_reference(
        &self,
        mel: &MelSpectrogram,
        spk: &SpeakerEmbedding,
        rng: Option<&mut SeededRng>,
    ) -> Result<LatentSeq> {
        self.check_mel(mel)?;
        let frames = mel.frames().max(self.config.downsample);
        let rows: Vec<Vec<f64>> = (0..frames).map(|t| mel.row(reflect_index(t as isize, mel.frames())).to_vec()).collect();
        let mut g = Graph::new();
        let x = g.constant(self.norm.normalize_rows(&rows));
        let s = g.constant(Self::spk_row(spk)?);
        let (mu, logvar, _) = self.graph_reference(&mut g, x, s, &[frames]);
        let (mu, logvar) = (g.value(mu).clone(), g.value(logvar).clone());
        let sample = match rng {
            Some(r) => {
                let eps = Mat::from_shape_simple_fn(mu.dim(), || normal(r));
                &mu + &(logvar.mapv(|l| (0.5 * l).exp()) * eps)
            }
            None => mu.clone(),
        };
        Ok(LatentSeq { mu, logvar, sample })
    }

    pub fn encode_phonemes(&self, ids: &[usize], spk: &SpeakerEmbedding) -> Result<Mat> {
        if ids.is_empty() {
            return Err(Error::invalid("empty phoneme sequence"));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.vocab.len()) {
            return Err(Error::invalid(format!("phoneme id {bad} outside vocabulary of {}", self.vocab.len())));
        }
        let mut g = Graph::new();
        let s = g.constant(Self::spk_row(spk)?);
        let v = self.graph_phonemes(&mut g, ids, s, &[ids.len()]);
        Ok(g.value(v).clone())
    }

    /// Log-mel frames from a phoneme encoding and latent sequence. The
    /// latent is repeated `downsample` times per row and trimmed or
    /// extended to the encoding's frame count.
    pub fn decode(
        &self,
        phon: &Mat,
        latent: &LatentSeq,
        spk: &SpeakerEmbedding,
        cond: Option<&AcousticFrameFeatures>,
        analysis: &AnalysisConfig,
    ) -> Result<MelSpectrogram> {
        let frames = phon.nrows();
        let n = latent.sample.nrows();
        if (n * self.config.downsample).abs_diff(frames) >= self.config.downsample {
            return Err(Error::invalid(format!("{n} latent rows do not cover {frames} frames")));
        }
        let cond = self.cond_matrix(cond, frames)?;
        let mut g = Graph::new();
        let p = g.constant(phon.clone());
        let z = g.constant(latent.sample.clone());
        let s = g.constant(Self::spk_row(spk)?);
        let c = cond.map(|c| g.constant(c));
        let out = self.graph_decode(&mut g, p, z, &[n], s, c, &[frames]);
        MelSpectrogram::new(self.norm.denormalize(g.value(out)), analysis.clone())
    }

    pub(crate) fn cond_matrix(&self, cond: Option<&AcousticFrameFeatures>, frames: usize) -> Result<Option<Mat>> {
        match (self.mode, cond) {
            (ConditioningMode::None, None) => Ok(None),
            (ConditioningMode::None, Some(_)) => Err(Error::invalid("model takes no conditioning features")),
            (m, None) => Err(Error::invalid(format!("conditioning mode {m} needs features"))),
            (m, Some(f)) if f.len() != frames => {
                Err(Error::invalid(format!("{m} features have {} frames, expected {frames}", f.len())))
            }
            (m, Some(f)) => Ok(Some(m.select(f))),
        }
    }

    /// Conversion: phonemes and decoder get the target identity, the
    /// reference encoder sees the source mel with the source identity and
    /// its mean latent is used. Output has the source frame count.
    pub fn convert(
        &self,
        source_mel: &MelSpectrogram,
        phonemes: &[usize],
        source_spk: &SpeakerEmbedding,
        target_spk: &SpeakerEmbedding,
        cond: Option<&AcousticFrameFeatures>,
    ) -> Result<MelSpectrogram> {
        if phonemes.len() != source_mel.frames() {
            return Err(Error::invalid(format!(
                "{} phoneme frames for {} mel frames",
                phonemes.len(),
                source_mel.frames()
            )));
        }
        let latent = self.encode_reference(source_mel, source_spk, None)?;
        let phon = self.encode_phonemes(phonemes, target_spk)?;
        self.decode(&phon, &latent, target_spk, cond, source_mel.config())
    }
}
