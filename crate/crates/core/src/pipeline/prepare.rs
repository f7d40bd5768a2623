use std::collections::BTreeMap;
use std::path::Path;

use crate::audio::{mel_spectrogram, read_wav, AnalysisConfig, MelSpectrogram, Waveform};
use crate::corpus::{Manifest, PhonemeVocab, UtteranceRecord};
use crate::features::{
    estimate_f0, extract_conditioning, read_features, mgc_from_spectrum, F0Config, F0Track, GlobalMgcStats, MgcConfig, MgcTrack,
    SpeakerF0Stats,
};
use crate::vc::{centroid_embedding, rows_to_mat, EmbeddingProvider, SpeakerTable, TrainingExample};
use crate::{Error, Result};

/// Signal-level analysis of one utterance.
#[derive(Debug, Clone)]
pub struct Analysed {
    pub record: UtteranceRecord,
    pub waveform: Waveform,
    pub mel: MelSpectrogram,
    pub f0: F0Track,
    pub mgc: MgcTrack,
    pub phonemes: Vec<String>,
}

pub fn analyse(record: &UtteranceRecord, cfg: &AnalysisConfig) -> Result<Analysed> {
    let waveform = read_wav(&record.wav_path)?.to_standard_rate();
    let mel = mel_spectrogram(&waveform, cfg)?;
    let f0 = estimate_f0(&waveform, cfg, &F0Config::default());
    let mgc = mgc_from_spectrum(&waveform, cfg, &MgcConfig::default());
    let alignment = record.load_alignment(waveform.duration_s() * 1000.0)?;
    let phonemes = alignment.upsample(cfg.frame_shift_ms, mel.frames()).into_iter().map(str::to_owned).collect();
    Ok(Analysed { record: record.clone(), waveform, mel, f0, mgc, phonemes })
}

/// Everything the model stages need from a manifest, in manifest order.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub utterances: Vec<Analysed>,
    pub examples: Vec<TrainingExample>,
    pub vocab: PhonemeVocab,
    pub speakers: SpeakerTable,
    pub f0_stats: BTreeMap<String, SpeakerF0Stats>,
    pub mgc_stats: GlobalMgcStats,
}

impl Prepared {
    pub fn example(&self, utt_id: &str) -> Option<&TrainingExample> {
        self.examples.iter().find(|e| e.utt_id == utt_id)
    }

    /// Replaces the computed conditioning features with `<dir>/<utt_id>.feat`
    /// dumps. Every utterance needs a dump whose frame count matches its mel.
    pub fn attach_features(&mut self, dir: &Path) -> Result<()> {
        for ex in &mut self.examples {
            let path = dir.join(format!("{}.feat", ex.utt_id));
            if !path.exists() {
                return Err(Error::invalid(format!("no conditioning features for {} in {}", ex.utt_id, dir.display())));
            }
            let feats = read_features(&path)?;
            if feats.len() != ex.frames() {
                return Err(Error::invalid(format!(
                    "{}: feature dump has {} frames, mel has {}",
                    ex.utt_id,
                    feats.len(),
                    ex.frames()
                )));
            }
            ex.features = feats;
        }
        Ok(())
    }

    /// Examples whose utterance ids are in `m`.
    pub fn subset(&self, m: &Manifest) -> Vec<TrainingExample> {
        self.examples.iter().filter(|e| m.get(&e.utt_id).is_some()).cloned().collect()
    }
}

pub fn mgc_stats_array(s: &GlobalMgcStats) -> [f64; 4] {
    [s.mgc0_mean, s.mgc0_std, s.mgc1_mean, s.mgc1_std]
}

pub fn mgc_stats_from_array(a: [f64; 4]) -> GlobalMgcStats {
    GlobalMgcStats { mgc0_mean: a[0], mgc0_std: a[1], mgc1_mean: a[2], mgc1_std: a[3] }
}

/// Analyses every utterance and derives the shared tables. `vocab` and
/// `mgc_stats` are reused when given (conversion with a trained model);
/// otherwise they come from this manifest. Speaker embeddings are the
/// centroid of per-utterance embeddings.
pub fn prepare(
    manifest: &Manifest,
    cfg: &AnalysisConfig,
    vocab: Option<&PhonemeVocab>,
    mgc_stats: Option<GlobalMgcStats>,
) -> Result<Prepared> {
    let utterances = manifest.records().iter().map(|r| analyse(r, cfg)).collect::<Result<Vec<_>>>()?;
    let vocab = match vocab {
        Some(v) => v.clone(),
        None => PhonemeVocab::new(utterances.iter().flat_map(|u| u.phonemes.iter().map(String::as_str))),
    };
    let mgc_stats = match mgc_stats {
        Some(s) => s,
        None => GlobalMgcStats::from_tracks(utterances.iter().map(|u| &u.mgc))?,
    };
    let provider = EmbeddingProvider::new(cfg.mel_bins);
    let mut f0_stats = BTreeMap::new();
    let mut speakers = SpeakerTable::new();
    for spk in manifest.speakers() {
        let own: Vec<&Analysed> = utterances.iter().filter(|u| u.record.speaker_id == spk).collect();
        let stats = SpeakerF0Stats::from_tracks(own.iter().map(|u| &u.f0))
            .map_err(|e| Error::data(format!("speaker {spk}: {e}")))?;
        f0_stats.insert(spk.to_string(), stats);
        let per_utt =
            own.iter().map(|u| provider.embed(spk, &[&u.mel])).collect::<Result<Vec<_>>>()?;
        speakers.insert(spk.to_string(), centroid_embedding(&per_utt)?);
    }
    let examples = utterances
        .iter()
        .map(|u| {
            let features = extract_conditioning(&u.f0, &u.mgc, &f0_stats[&u.record.speaker_id], &mgc_stats)?;
            let ex = TrainingExample {
                utt_id: u.record.utt_id.clone(),
                speaker_id: u.record.speaker_id.clone(),
                style: u.record.style,
                mel: rows_to_mat(u.mel.values()),
                phonemes: vocab.ids(u.phonemes.iter().map(String::as_str)),
                features,
            };
            ex.validate()?;
            Ok(ex)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { utterances, examples, vocab, speakers, f0_stats, mgc_stats })
}
