use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::prepare::{mgc_stats_array, mgc_stats_from_array, prepare, Prepared};
use crate::audio::{read_wav, write_wav, AnalysisConfig, MelInverter, WavFormat, Waveform};
use crate::corpus::{split_speakers, train_val_split, Manifest, SplitSpec, Style};
use crate::enhance::ssdrc_with;
use crate::features::write_features;
use crate::vc::{
    export_embeddings, read_checkpoint, write_checkpoint, ConditioningMode, ModelConfig, MelNorm, StyleClassifier, TrainLog,
    TrainingExample, VcModel,
};
use crate::{Error, Result};

pub const VERSION: &str = concat!("lvc ", env!("CARGO_PKG_VERSION"));

/// Written next to every generated system directory so evaluation can
/// check that its inputs come from one experiment.
pub const PROVENANCE_FILE: &str = "system.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    pub config_hash: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_loss: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl Provenance {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(PROVENANCE_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// `None` when the directory carries no provenance file.
    pub fn read(dir: &Path) -> Result<Option<Self>> {
        let p = dir.join(PROVENANCE_FILE);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
    }
}

/// Speakers that train: all but the configured targets present in `m`.
fn training_manifest(m: &Manifest, cfg: &ExperimentConfig) -> Result<Manifest> {
    let present: Vec<String> = cfg.targets.iter().filter(|t| m.speakers().any(|s| s == t.as_str())).cloned().collect();
    if present.is_empty() {
        return Ok(m.clone());
    }
    let (train, _) = split_speakers(m, &SplitSpec { targets: present })?;
    Ok(train)
}

fn fit_norm(examples: &[TrainingExample]) -> Result<MelNorm> {
    MelNorm::fit(examples.iter().map(|e| &e.mel))
}

/// Writes per-utterance conditioning dumps, the speaker embedding table and
/// the phoneme vocabulary.
pub fn extract(manifest: &Manifest, out: &Path, analysis: &AnalysisConfig) -> Result<Prepared> {
    fs::create_dir_all(out)?;
    let prepared = prepare(manifest, analysis, None, None)?;
    for ex in &prepared.examples {
        write_features(out.join(format!("{}.feat", ex.utt_id)), &ex.features)?;
    }
    export_embeddings(out.join("embeddings.tsv"), &prepared.speakers)?;
    fs::write(out.join("vocab.txt"), prepared.vocab.symbols().join("\n") + "\n")?;
    Ok(prepared)
}

#[derive(Debug, Clone)]
pub struct ClassifierOutcome {
    pub classifier: StyleClassifier,
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
    /// Accuracy on the per-speaker validation hold-out, when there is one.
    pub heldout_accuracy: Option<f64>,
}

/// Stage I on the non-target speakers of `manifest`.
pub fn train_classifier_stage(
    manifest: &Manifest,
    cfg: &ExperimentConfig,
    analysis: &AnalysisConfig,
) -> Result<ClassifierOutcome> {
    let m = training_manifest(manifest, cfg)?;
    for style in Style::ALL {
        if m.style_records(style).next().is_none() {
            return Err(Error::invalid(format!("classifier training needs both styles; no {style} utterances")));
        }
    }
    let (train, val) = train_val_split(&m, cfg.val_fraction, cfg.seed)?;
    let prepared = prepare(&m, analysis, None, None)?;
    let train_ex = prepared.subset(&train);
    let mut clf = StyleClassifier::new(fit_norm(&train_ex)?, cfg.seed);
    let losses = crate::vc::train_style_classifier(&mut clf, &train_ex, &cfg.classifier_train())?;
    clf.freeze();
    let train_accuracy = clf.accuracy(&train_ex);
    let heldout_accuracy = val.map(|v| clf.accuracy(&prepared.subset(&v)));
    Ok(ClassifierOutcome { classifier: clf, losses, train_accuracy, heldout_accuracy })
}

pub fn save_classifier(path: &Path, out: &ClassifierOutcome, cfg: &ExperimentConfig) -> Result<()> {
    write_checkpoint(path, &out.classifier.to_checkpoint(&cfg.hash(), out.losses.len() as u64, cfg.seed))?;
    let mut s = String::from("step\tbce\n");
    for (i, l) in out.losses.iter().enumerate() {
        s.push_str(&format!("{}\t{l:.6}\n", i + 1));
    }
    fs::write(sidecar(path, "loss.tsv"), s)?;
    Ok(())
}

pub fn load_classifier(path: &Path) -> Result<StyleClassifier> {
    StyleClassifier::from_checkpoint(&read_checkpoint(path)?)
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Debug, Clone)]
pub struct VcOutcome {
    pub model: VcModel,
    pub log: TrainLog,
    pub prepared: Prepared,
}

/// Stage II (and the optional joint phase) on the training split of the
/// non-target speakers. Every speaker in `manifest`, targets included, gets
/// an embedding in the saved table. With `features`, conditioning comes from
/// extracted dumps instead of being computed here.
pub fn train_vc_stage(
    manifest: &Manifest,
    cfg: &ExperimentConfig,
    analysis: &AnalysisConfig,
    clf: Option<&StyleClassifier>,
    features: Option<&Path>,
) -> Result<VcOutcome> {
    match (cfg.style_loss, clf) {
        (true, None) => return Err(Error::invalid("style loss is on but no style classifier was given")),
        (_, Some(c)) if c.norm.bins() != analysis.mel_bins => {
            return Err(Error::invalid(format!(
                "classifier expects {} mel bins, analysis produces {}",
                c.norm.bins(),
                analysis.mel_bins
            )))
        }
        _ => {}
    }
    let mut prepared = prepare(manifest, analysis, None, None)?;
    if let (Some(dir), true) = (features, cfg.conditioning != ConditioningMode::None) {
        prepared.attach_features(dir)?;
    }
    let (train, _) = train_val_split(&training_manifest(manifest, cfg)?, cfg.val_fraction, cfg.seed)?;
    let train_ex = prepared.subset(&train);
    let mut model = VcModel::new(
        ModelConfig::default(),
        cfg.conditioning,
        prepared.vocab.clone(),
        fit_norm(&train_ex)?,
        cfg.seed,
    );
    let log = crate::vc::train_vc(&mut model, &train_ex, &prepared.speakers, clf, &cfg.vc_train())?;
    Ok(VcOutcome { model, log, prepared })
}

/// Checkpoint plus `<path>.log.tsv`; the `l_s` column exists only when the
/// style loss was on.
pub fn save_vc(path: &Path, out: &VcOutcome, cfg: &ExperimentConfig) -> Result<()> {
    let mut ckpt =
        out.model.to_checkpoint(&cfg.hash(), out.log.records.len() as u64, cfg.seed, cfg.style_loss, &out.prepared.speakers);
    ckpt.meta.mgc_stats = Some(mgc_stats_array(&out.prepared.mgc_stats));
    write_checkpoint(path, &ckpt)?;
    fs::write(sidecar(path, "log.tsv"), format_train_log(&out.log, cfg.style_loss))?;
    Ok(())
}

pub fn format_train_log(log: &TrainLog, style_loss: bool) -> String {
    let mut s = String::from(if style_loss { "step\tl_rec\tl_kl\tl_s\ttotal\n" } else { "step\tl_rec\tl_kl\ttotal\n" });
    for r in &log.records {
        let l = &r.losses;
        s.push_str(&format!("{}\t{:.6}\t{:.6}\t", r.step, l.l_rec, l.l_kl));
        if style_loss {
            s.push_str(&l.l_s.map_or("-".to_string(), |v| format!("{v:.6}")));
            s.push('\t');
        }
        s.push_str(&format!("{:.6}\n", l.total));
    }
    s
}

pub fn conversion_file_name(utt_id: &str, target: &str) -> String {
    format!("{utt_id}__to__{target}.wav")
}

/// Converts every utterance of `manifest` not spoken by `target` into the
/// target voice and writes `<utt_id>__to__<target>.wav` files. Output
/// lengths equal the source lengths.
pub fn run_conversion(
    manifest: &Manifest,
    checkpoint: &Path,
    target: &str,
    out_dir: &Path,
    cfg: &ExperimentConfig,
    analysis: &AnalysisConfig,
    features: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    let ckpt = read_checkpoint(checkpoint)?;
    let mgc = ckpt.meta.mgc_stats.map(mgc_stats_from_array);
    let (model, table) = VcModel::from_checkpoint(&ckpt)?;
    let target_spk = table
        .get(target)
        .ok_or_else(|| Error::invalid(format!("target speaker '{target}' has no embedding in the checkpoint")))?;
    let sources = manifest.filter(|r| r.speaker_id != target)?;
    let mut prepared = prepare(&sources, analysis, Some(&model.vocab), mgc)?;
    if let (Some(dir), true) = (features, model.mode != ConditioningMode::None) {
        prepared.attach_features(dir)?;
    }
    let inverter = MelInverter::new(analysis)?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (u, ex) in prepared.utterances.iter().zip(&prepared.examples) {
        let src_spk = table.get(&ex.speaker_id).unwrap_or(&prepared.speakers[&ex.speaker_id]);
        let cond = (model.mode != ConditioningMode::None).then_some(&ex.features);
        let mel = model.convert(&u.mel, &ex.phonemes, src_spk, target_spk, cond)?;
        let mut samples = inverter.invert(&mel, cfg.griffin_lim_iters)?.into_samples();
        samples.resize(u.waveform.len(), 0.0);
        let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.99 {
            samples.iter_mut().for_each(|v| *v *= 0.99 / peak);
        }
        let path = out_dir.join(conversion_file_name(&ex.utt_id, target));
        write_wav(&path, &Waveform::new(samples, u.waveform.sample_rate())?, WavFormat::Pcm16)?;
        written.push(path);
    }
    Provenance {
        kind: "conversion".into(),
        config_hash: ckpt.meta.config_hash.clone(),
        version: VERSION.into(),
        checkpoint: Some(checkpoint.display().to_string()),
        conditioning: ckpt.meta.conditioning.map(|c| c.to_string()),
        style_loss: ckpt.meta.style_loss,
        target: Some(target.into()),
    }
    .write(out_dir)?;
    Ok(written)
}

/// Applies spectral shaping and compression to every utterance of
/// `manifest`, writing `<utt_id>.wav`.
pub fn run_enhance(manifest: &Manifest, out_dir: &Path, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for r in manifest.records() {
        let w = read_wav(&r.wav_path)?.to_standard_rate();
        let path = out_dir.join(format!("{}.wav", r.utt_id));
        write_wav(&path, &ssdrc_with(&w, &cfg.ss, &cfg.drc)?, WavFormat::Pcm16)?;
        written.push(path);
    }
    Provenance {
        kind: "ssdrc".into(),
        config_hash: cfg.hash(),
        version: VERSION.into(),
        checkpoint: None,
        conditioning: None,
        style_loss: None,
        target: None,
    }
    .write(out_dir)?;
    Ok(written)
}
