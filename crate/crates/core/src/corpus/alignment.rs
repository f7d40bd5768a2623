use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Silence symbol, always id 0 in a [`PhonemeVocab`].
pub const SILENCE: &str = "sil";

#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeSegment {
    pub phoneme: String,
    pub start_ms: f64,
    pub end_ms: f64,
}

/// Timed phoneme segments for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeAlignment {
    entries: Vec<PhonemeSegment>,
}

impl PhonemeAlignment {
    /// Validates that segments are non-empty, start at or after 0, have
    /// positive length and are contiguous to within 1 ms.
    pub fn new(entries: Vec<PhonemeSegment>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("alignment has no entries"));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.start_ms < 0.0 || !(e.end_ms > e.start_ms) {
                return Err(Error::invalid(format!(
                    "segment {i} ({}) has bad bounds {}..{}",
                    e.phoneme, e.start_ms, e.end_ms
                )));
            }
            if i > 0 && (e.start_ms - entries[i - 1].end_ms).abs() > 1.0 {
                return Err(Error::invalid(format!("segment {i} is not contiguous with its predecessor")));
            }
        }
        Ok(Self { entries })
    }

    /// Splits `[0, duration_ms)` evenly across the given phonemes.
    pub fn uniform(phonemes: &[String], duration_ms: f64) -> Result<Self> {
        if phonemes.is_empty() || !(duration_ms > 0.0) {
            return Err(Error::invalid("uniform segmentation needs phonemes and a positive duration"));
        }
        let step = duration_ms / phonemes.len() as f64;
        Self::new(
            phonemes
                .iter()
                .enumerate()
                .map(|(i, p)| PhonemeSegment {
                    phoneme: p.clone(),
                    start_ms: i as f64 * step,
                    end_ms: (i + 1) as f64 * step,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[PhonemeSegment] {
        &self.entries
    }

    pub fn end_ms(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.end_ms)
    }

    pub fn phonemes(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.phoneme.as_str())
    }

    /// Frame-level labels: frame `t` takes the segment covering `t * shift`
    /// (half-open intervals); frames past the end repeat the last label.
    pub fn upsample(&self, frame_shift_ms: f64, total_frames: usize) -> Vec<&str> {
        let mut out = Vec::with_capacity(total_frames);
        let mut seg = 0;
        for t in 0..total_frames {
            let time = t as f64 * frame_shift_ms;
            while seg + 1 < self.entries.len() && time >= self.entries[seg].end_ms {
                seg += 1;
            }
            out.push(self.entries[seg].phoneme.as_str());
        }
        out
    }

    /// Writes `phoneme\tstart_ms\tend_ms` lines.
    pub fn write_lab(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!("{}\t{}\t{}\n", e.phoneme, e.start_ms, e.end_ms));
        }
        fs::write(path, s)?;
        Ok(())
    }
}

/// Frame-level phoneme sequence for an alignment; see [`PhonemeAlignment::upsample`].
pub fn upsample_phonemes(a: &PhonemeAlignment, frame_shift_ms: f64, total_frames: usize) -> Vec<String> {
    a.upsample(frame_shift_ms, total_frames).into_iter().map(str::to_owned).collect()
}

pub fn read_lab(path: impl AsRef<Path>) -> Result<PhonemeAlignment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = || Error::format(path, format!("line {}: expected phoneme<TAB>start_ms<TAB>end_ms", n + 1));
        if cols.len() != 3 {
            return Err(bad());
        }
        entries.push(PhonemeSegment {
            phoneme: cols[0].to_string(),
            start_ms: cols[1].trim().parse().map_err(|_| bad())?,
            end_ms: cols[2].trim().parse().map_err(|_| bad())?,
        });
    }
    PhonemeAlignment::new(entries).map_err(|e| Error::format(path, e.to_string()))
}

/// Whitespace-separated phoneme string without timings.
pub fn read_phoneme_string(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let phones: Vec<String> = fs::read_to_string(path)?.split_whitespace().map(str::to_owned).collect();
    if phones.is_empty() {
        return Err(Error::format(path, "empty phoneme string"));
    }
    Ok(phones)
}

/// Symbol table mapping phonemes to embedding ids. Id 0 is reserved for
/// silence and unknown symbols map to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeVocab {
    symbols: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl PhonemeVocab {
    pub fn new<'a>(symbols: impl IntoIterator<Item = &'a str>) -> Self {
        let mut all: Vec<String> = symbols.into_iter().filter(|s| *s != SILENCE).map(str::to_owned).collect();
        all.sort();
        all.dedup();
        all.insert(0, SILENCE.to_string());
        Self::from_symbols(all)
    }

    pub fn from_symbols(symbols: Vec<String>) -> Self {
        let index = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { symbols, index }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn id(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(0)
    }

    pub fn ids<'a>(&self, symbols: impl IntoIterator<Item = &'a str>) -> Vec<usize> {
        symbols.into_iter().map(|s| self.id(s)).collect()
    }
}
