use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classifier::StyleClassifier;
use super::data::MelNorm;
use super::embedding::{SpeakerEmbedding, SpeakerTable};
use super::model::{ConditioningMode, ModelConfig, VcModel};
use crate::corpus::PhonemeVocab;
use crate::nn::{Mat, ParamStore};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"LVCCKPT1";
pub const CHECKPOINT_VERSION: u32 = 1;

pub const KIND_VC: &str = "vc";
pub const KIND_CLASSIFIER: &str = "style_classifier";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub kind: String,
    pub config_hash: String,
    pub step: u64,
    pub seed: u64,
    pub mel_norm: MelNorm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<ConditioningMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_loss: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocab: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub speakers: BTreeMap<String, Vec<f64>>,
    /// Corpus mgc0/mgc1 moments (mean, std, mean, std) the conditioning
    /// features were normalised with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mgc_stats: Option<[f64; 4]>,
}

/// Metadata plus named parameter arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub arrays: BTreeMap<String, Mat>,
}

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

/// Layout: magic, u32 version, u32 metadata length, metadata JSON, u32 array
/// count, then per array: u32 name length, name, u32 rows, u32 cols,
/// row-major little-endian `f32` values.
pub fn write_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let meta = serde_json::to_vec(&ckpt.meta)?;
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, CHECKPOINT_VERSION as usize);
    put_u32(&mut buf, meta.len());
    buf.extend_from_slice(&meta);
    put_u32(&mut buf, ckpt.arrays.len());
    for (name, a) in &ckpt.arrays {
        put_u32(&mut buf, name.len());
        buf.extend_from_slice(name.as_bytes());
        put_u32(&mut buf, a.nrows());
        put_u32(&mut buf, a.ncols());
        for v in a.iter() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(self.path, "truncated checkpoint"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0, path };
    if r.take(8)? != MAGIC {
        return Err(Error::format(path, "not a checkpoint (bad magic)"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::format(path, format!("unsupported checkpoint version {version}")));
    }
    let len = r.u32()?;
    let meta: CheckpointMeta =
        serde_json::from_slice(r.take(len)?).map_err(|e| Error::format(path, format!("metadata: {e}")))?;
    let count = r.u32()?;
    let mut arrays = BTreeMap::new();
    for _ in 0..count {
        let n = r.u32()?;
        let name = String::from_utf8(r.take(n)?.to_vec()).map_err(|_| Error::format(path, "array name is not UTF-8"))?;
        let (rows, cols) = (r.u32()?, r.u32()?);
        let data: Vec<f64> =
            r.take(4 * rows * cols)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        arrays.insert(name, Mat::from_shape_vec((rows, cols), data).expect("checked length"));
    }
    if r.pos != buf.len() {
        return Err(Error::format(path, "trailing bytes after checkpoint arrays"));
    }
    Ok(Checkpoint { meta, arrays })
}

fn arrays(store: &ParamStore) -> BTreeMap<String, Mat> {
    store.iter().map(|(n, v)| (n.to_string(), v.clone())).collect()
}

impl VcModel {
    pub fn to_checkpoint(&self, config_hash: &str, step: u64, seed: u64, style_loss: bool, speakers: &SpeakerTable) -> Checkpoint {
        Checkpoint {
            meta: CheckpointMeta {
                kind: KIND_VC.into(),
                config_hash: config_hash.into(),
                step,
                seed,
                mel_norm: self.norm.clone(),
                conditioning: Some(self.mode),
                style_loss: Some(style_loss),
                model: Some(self.config.clone()),
                vocab: self.vocab.symbols().to_vec(),
                speakers: speakers.iter().map(|(k, v)| (k.clone(), v.vector.clone())).collect(),
                mgc_stats: None,
            },
            arrays: arrays(&self.params),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<(Self, SpeakerTable)> {
        let m = &ckpt.meta;
        if m.kind != KIND_VC {
            return Err(Error::data(format!("expected a {KIND_VC} checkpoint, found {}", m.kind)));
        }
        let (Some(mode), Some(config)) = (m.conditioning, m.model.clone()) else {
            return Err(Error::data("conversion checkpoint lacks mode or model configuration"));
        };
        let vocab = PhonemeVocab::from_symbols(m.vocab.clone());
        let mut model = VcModel::new(config, mode, vocab, m.mel_norm.clone(), m.seed);
        model.params.load(&ckpt.arrays)?;
        let speakers = m
            .speakers
            .iter()
            .map(|(k, v)| Ok((k.clone(), SpeakerEmbedding::new(k.clone(), v.clone())?)))
            .collect::<Result<SpeakerTable>>()?;
        Ok((model, speakers))
    }
}

impl StyleClassifier {
    pub fn to_checkpoint(&self, config_hash: &str, step: u64, seed: u64) -> Checkpoint {
        Checkpoint {
            meta: CheckpointMeta {
                kind: KIND_CLASSIFIER.into(),
                config_hash: config_hash.into(),
                step,
                seed,
                mel_norm: self.norm.clone(),
                conditioning: None,
                style_loss: None,
                model: None,
                vocab: Vec::new(),
                speakers: BTreeMap::new(),
                mgc_stats: None,
            },
            arrays: arrays(&self.params),
        }
    }

    /// Loads a classifier; it comes back frozen.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.meta.kind != KIND_CLASSIFIER {
            return Err(Error::data(format!("expected a {KIND_CLASSIFIER} checkpoint, found {}", ckpt.meta.kind)));
        }
        let mut clf = StyleClassifier::new(ckpt.meta.mel_norm.clone(), ckpt.meta.seed);
        clf.params.load(&ckpt.arrays)?;
        clf.freeze();
        Ok(clf)
    }
}
