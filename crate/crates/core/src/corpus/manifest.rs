use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;

use super::alignment::{read_lab, read_phoneme_string, PhonemeAlignment};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Style {
    Neutral,
    Lombard,
}

impl Style {
    pub const ALL: [Style; 2] = [Style::Neutral, Style::Lombard];

    pub fn as_str(self) -> &'static str {
        match self {
            Style::Neutral => "neutral",
            Style::Lombard => "lombard",
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neutral" => Ok(Style::Neutral),
            "lombard" => Ok(Style::Lombard),
            other => Err(Error::invalid(format!("unknown style '{other}' (expected lombard or neutral)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub utt_id: String,
    pub speaker_id: String,
    pub style: Style,
    pub wav_path: PathBuf,
    pub alignment_path: PathBuf,
}

impl UtteranceRecord {
    /// True when the alignment is a bare phoneme string (`.phn`) that gets
    /// segmented uniformly instead of a timed `.lab` file.
    pub fn uniform_alignment(&self) -> bool {
        self.alignment_path.extension().is_some_and(|e| e == "phn")
    }

    /// Loads the alignment; untimed phoneme strings are spread evenly over
    /// `duration_ms`.
    pub fn load_alignment(&self, duration_ms: f64) -> Result<PhonemeAlignment> {
        if self.uniform_alignment() {
            let phones = read_phoneme_string(&self.alignment_path)?;
            PhonemeAlignment::uniform(&phones, duration_ms)
        } else {
            read_lab(&self.alignment_path)
        }
    }
}

/// Validated list of utterances with a per-speaker index.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    records: Vec<UtteranceRecord>,
    speakers: BTreeMap<String, Vec<usize>>,
}

impl Manifest {
    /// Rejects empty record lists and duplicate utterance ids.
    pub fn new(records: Vec<UtteranceRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("manifest has no records"));
        }
        let mut seen = BTreeSet::new();
        let mut speakers: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.utt_id.as_str()) {
                return Err(Error::invalid(format!("duplicate utt_id '{}'", r.utt_id)));
            }
            speakers.entry(r.speaker_id.clone()).or_default().push(i);
        }
        Ok(Self { records, speakers })
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn speakers(&self) -> impl Iterator<Item = &str> {
        self.speakers.keys().map(String::as_str)
    }

    pub fn speaker_records(&self, speaker: &str) -> impl Iterator<Item = &UtteranceRecord> {
        self.speakers.get(speaker).into_iter().flatten().map(|&i| &self.records[i])
    }

    pub fn style_records(&self, style: Style) -> impl Iterator<Item = &UtteranceRecord> {
        self.records.iter().filter(move |r| r.style == style)
    }

    pub fn get(&self, utt_id: &str) -> Option<&UtteranceRecord> {
        self.records.iter().find(|r| r.utt_id == utt_id)
    }

    /// Sub-manifest of the records accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&UtteranceRecord) -> bool) -> Result<Self> {
        Self::new(self.records.iter().filter(|r| keep(r)).cloned().collect())
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.utt_id,
                r.speaker_id,
                r.style,
                r.wav_path.display(),
                r.alignment_path.display()
            ));
        }
        fs::write(path, s)?;
        Ok(())
    }

    /// Reads a manifest TSV; every referenced file must exist.
    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::format(path, format!("line {}: expected 5 tab-separated fields", n + 1)));
            }
            let r = UtteranceRecord {
                utt_id: cols[0].to_string(),
                speaker_id: cols[1].to_string(),
                style: cols[2].parse().map_err(|e: Error| Error::format(path, format!("line {}: {e}", n + 1)))?,
                wav_path: cols[3].into(),
                alignment_path: cols[4].into(),
            };
            for p in [&r.wav_path, &r.alignment_path] {
                if !p.exists() {
                    return Err(Error::data(format!("{}: referenced file {} does not exist", path.display(), p.display())));
                }
            }
            records.push(r);
        }
        Self::new(records)
    }
}

/// Scans `<root>/<speaker>/<style>/*.wav`. Each wav needs a sibling `.lab`
/// alignment (or an untimed `.phn` phoneme string); wavs without one are
/// skipped with a warning.
pub fn build_manifest(root: impl AsRef<Path>) -> Result<Manifest> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::invalid(format!("corpus root {} is not a directory", root.display())));
    }
    let mut records = Vec::new();
    for spk_dir in sorted_dirs(root)? {
        let speaker = file_name(&spk_dir);
        for style_dir in sorted_dirs(&spk_dir)? {
            let Ok(style) = file_name(&style_dir).parse::<Style>() else {
                log::warn!("skipping unrecognised style directory {}", style_dir.display());
                continue;
            };
            let mut wavs: Vec<PathBuf> = fs::read_dir(&style_dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "wav"))
                .collect();
            wavs.sort();
            for wav in wavs {
                let alignment = ["lab", "phn"].iter().map(|ext| wav.with_extension(ext)).find(|p| p.exists());
                let Some(alignment_path) = alignment else {
                    log::warn!("no alignment for {}, skipping", wav.display());
                    continue;
                };
                records.push(UtteranceRecord {
                    utt_id: wav.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                    speaker_id: speaker.clone(),
                    style,
                    wav_path: wav,
                    alignment_path,
                });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::invalid(format!("no usable utterances under {}", root.display())));
    }
    Manifest::new(records)
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    v.sort();
    Ok(v)
}

fn file_name(p: &Path) -> String {
    p.file_name().unwrap_or_default().to_string_lossy().into_owned()
}

/// Held-out target speakers for conversion; everything else trains.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub targets: Vec<String>,
}

impl SplitSpec {
    /// One female (s27) and one male (s43) target from the Lombard Grid set.
    pub fn lombard_grid() -> Self {
        Self { targets: vec!["s27".into(), "s43".into()] }
    }
}

/// Partitions by speaker into (train, eval); eval holds only target speakers.
pub fn split_speakers(m: &Manifest, spec: &SplitSpec) -> Result<(Manifest, Manifest)> {
    if spec.targets.is_empty() {
        return Err(Error::invalid("split needs at least one target speaker"));
    }
    for t in &spec.targets {
        if !m.speakers.contains_key(t) {
            return Err(Error::invalid(format!("target speaker '{t}' not in manifest")));
        }
    }
    let is_target = |r: &UtteranceRecord| spec.targets.contains(&r.speaker_id);
    Ok((m.filter(|r| !is_target(r))?, m.filter(is_target)?))
}

/// Per-speaker shuffled hold-out of `fraction` of each speaker's utterances
/// (rounded, at least one when the speaker has two or more).
pub fn train_val_split(m: &Manifest, fraction: f64, seed: u64) -> Result<(Manifest, Option<Manifest>)> {
    let mut val_ids = BTreeSet::new();
    for (spk, idx) in &m.speakers {
        if idx.len() < 2 || fraction <= 0.0 {
            continue;
        }
        let mut idx = idx.clone();
        idx.shuffle(&mut seeded(derive_seed(seed, spk)));
        let n = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        val_ids.extend(idx[..n].iter().copied());
    }
    let pick = |want: bool| -> Vec<UtteranceRecord> {
        m.records.iter().enumerate().filter(|(i, _)| val_ids.contains(i) == want).map(|(_, r)| r.clone()).collect()
    };
    let val = pick(true);
    Ok((Manifest::new(pick(false))?, if val.is_empty() { None } else { Some(Manifest::new(val)?) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, spk: &str, style: Style) -> UtteranceRecord {
        UtteranceRecord {
            utt_id: id.into(),
            speaker_id: spk.into(),
            style,
            wav_path: format!("{id}.wav").into(),
            alignment_path: format!("{id}.lab").into(),
        }
    }

    fn toy(speakers: usize, per: usize) -> Manifest {
        let mut v = Vec::new();
        for s in 0..speakers {
            for u in 0..per {
                let style = if u % 2 == 0 { Style::Neutral } else { Style::Lombard };
                v.push(rec(&format!("s{s}_{u}"), &format!("s{s}"), style));
            }
        }
        Manifest::new(v).unwrap()
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = rec("a", "s1", Style::Neutral);
        assert!(Manifest::new(vec![r.clone(), r]).is_err());
    }

    #[test]
    fn speaker_split_is_disjoint() {
        let m = toy(4, 10);
        let (train, eval) = split_speakers(&m, &SplitSpec { targets: vec!["s2".into()] }).unwrap();
        assert_eq!(train.speakers().count(), 3);
        assert!(eval.records().iter().all(|r| r.speaker_id == "s2"));
        let a: BTreeSet<_> = train.speakers().collect();
        assert!(eval.speakers().all(|s| !a.contains(s)));
        assert!(split_speakers(&m, &SplitSpec { targets: vec!["s9".into()] }).is_err());
    }

    #[test]
    fn lombard_grid_sized_split() {
        let m = toy(54, 2);
        let m = Manifest::new(
            m.records()
                .iter()
                .cloned()
                .map(|mut r| {
                    r.speaker_id = format!("s{}", r.speaker_id[1..].parse::<usize>().unwrap() + 1);
                    r
                })
                .collect(),
        )
        .unwrap();
        let (train, eval) = split_speakers(&m, &SplitSpec::lombard_grid()).unwrap();
        assert_eq!(train.speakers().count(), 52);
        assert_eq!(eval.speakers().count(), 2);
    }

    #[test]
    fn val_split_holds_out_some_of_each_speaker() {
        let m = toy(3, 40);
        let (train, val) = train_val_split(&m, 0.05, 7).unwrap();
        let val = val.unwrap();
        assert_eq!(val.len(), 6);
        assert_eq!(train.len() + val.len(), m.len());
        assert!(train.records().iter().all(|r| val.get(&r.utt_id).is_none()));
    }

    #[test]
    fn tsv_round_trip_and_scan() {
        let dir = tempfile::tempdir().unwrap();
        let style_dir = dir.path().join("s1").join("lombard");
        fs::create_dir_all(&style_dir).unwrap();
        for id in ["u1", "u2", "u3"] {
            fs::write(style_dir.join(format!("{id}.wav")), b"").unwrap();
        }
        fs::write(style_dir.join("u1.lab"), "sil\t0\t10\n").unwrap();
        fs::write(style_dir.join("u2.phn"), "sil aa sil\n").unwrap();
        let m = build_manifest(dir.path()).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.get("u2").unwrap().uniform_alignment());
        let tsv = dir.path().join("m.tsv");
        m.write_tsv(&tsv).unwrap();
        assert_eq!(Manifest::read_tsv(&tsv).unwrap(), m);
        let a = m.get("u2").unwrap().load_alignment(300.0).unwrap();
        assert_eq!(a.entries()[1].start_ms, 100.0);
    }

    #[test]
    fn empty_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(build_manifest(dir.path()).is_err());
    }
}
