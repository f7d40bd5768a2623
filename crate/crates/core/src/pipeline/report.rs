use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::stages::{Provenance, VERSION};
use crate::audio::{compute_ltas, read_wav, AnalysisConfig, NoiseCondition};
use crate::corpus::{Manifest, Style};
use crate::intelligibility::{evaluate_condition, write_report, EvalRow, SiibConfig, Utterance};
use crate::{Error, Result};

/// Where a system's utterances come from: a directory of WAV files (ids are
/// file stems) or a manifest, optionally restricted to one style.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    Dir(PathBuf),
    Manifest(PathBuf, Option<Style>),
}

impl SystemSource {
    /// `path.tsv`, `path.tsv@lombard` or a directory.
    pub fn parse(s: &str) -> Result<Self> {
        let (path, style) = match s.rsplit_once('@') {
            Some((p, st)) if p.ends_with(".tsv") => (p, Some(st.parse()?)),
            _ => (s, None),
        };
        if path.ends_with(".tsv") {
            Ok(Self::Manifest(path.into(), style))
        } else {
            Ok(Self::Dir(path.into()))
        }
    }

    fn load(&self) -> Result<Vec<Utterance>> {
        let mut out = match self {
            Self::Dir(dir) => {
                let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
                    .map(|e| e.map(|e| e.path()))
                    .collect::<std::io::Result<_>>()?;
                paths.retain(|p| p.extension().is_some_and(|e| e == "wav"));
                paths
                    .iter()
                    .map(|p| {
                        let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                        Ok(Utterance { id, waveform: read_wav(p)?.to_standard_rate() })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Self::Manifest(path, style) => Manifest::read_tsv(path)?
                .records()
                .iter()
                .filter(|r| style.is_none_or(|s| r.style == s))
                .map(|r| Ok(Utterance { id: r.utt_id.clone(), waveform: read_wav(&r.wav_path)?.to_standard_rate() }))
                .collect::<Result<Vec<_>>>()?,
        };
        if out.is_empty() {
            return Err(Error::invalid(format!("system source {self:?} holds no utterances")));
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    fn provenance(&self) -> Result<Option<Provenance>> {
        match self {
            Self::Dir(d) => Provenance::read(d),
            Self::Manifest(..) => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRequest {
    /// Shared clean references. Without them each system is scored against
    /// its own noise-free output.
    pub clean: Option<SystemSource>,
    pub systems: Vec<(String, SystemSource)>,
    pub snrs: Vec<f64>,
    pub seed: u64,
    /// Accept systems generated under different configuration hashes.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub version: String,
    pub config_hashes: Vec<String>,
    pub seed: u64,
    pub snrs: Vec<f64>,
    pub systems: BTreeMap<String, String>,
    pub created_unix_s: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Sorted by system name, then SNR.
    pub rows: Vec<EvalRow>,
    pub meta: ReportMeta,
}

fn id_mismatch(system: &str, clean: &[Utterance], sys: &[Utterance]) -> Option<String> {
    let a: BTreeSet<&str> = clean.iter().map(|u| u.id.as_str()).collect();
    let b: BTreeSet<&str> = sys.iter().map(|u| u.id.as_str()).collect();
    if a == b {
        return None;
    }
    let missing: Vec<&str> = a.difference(&b).copied().collect();
    let extra: Vec<&str> = b.difference(&a).copied().collect();
    Some(format!("system {system}: missing ids {missing:?}, unexpected ids {extra:?}"))
}

/// Scores every system at every SNR. Noise is speech-shaped with a spectrum
/// taken from the clean references (or, without them, from all systems),
/// so every system faces the same masker.
pub fn run_eval(req: &EvalRequest) -> Result<ExperimentReport> {
    if req.systems.is_empty() {
        return Err(Error::invalid("no systems to evaluate"));
    }
    if req.snrs.is_empty() {
        return Err(Error::invalid("no SNRs to evaluate"));
    }
    let mut names = BTreeSet::new();
    if let Some((dup, _)) = req.systems.iter().find(|(n, _)| !names.insert(n.as_str())) {
        return Err(Error::invalid(format!("system name '{dup}' given twice")));
    }
    let mut hashes = BTreeSet::new();
    for (_, src) in &req.systems {
        if let Some(p) = src.provenance()? {
            hashes.insert(p.config_hash);
        }
    }
    if hashes.len() > 1 && !req.force {
        return Err(Error::invalid(format!(
            "systems come from different configurations {hashes:?}; pass --force to compare them anyway"
        )));
    }
    let systems: Vec<(String, Vec<Utterance>)> =
        req.systems.iter().map(|(n, s)| Ok((n.clone(), s.load()?))).collect::<Result<_>>()?;
    let clean = req.clean.as_ref().map(SystemSource::load).transpose()?;
    if let Some(c) = &clean {
        let problems: Vec<String> = systems.iter().filter_map(|(n, s)| id_mismatch(n, c, s)).collect();
        if !problems.is_empty() {
            return Err(Error::invalid(format!("utterance ids differ from the references: {}", problems.join("; "))));
        }
    }
    let ltas_source: Vec<_> = match &clean {
        Some(c) => c.iter().map(|u| u.waveform.clone()).collect(),
        None => systems.iter().flat_map(|(_, s)| s.iter().map(|u| u.waveform.clone())).collect(),
    };
    let ltas = compute_ltas(&ltas_source, &AnalysisConfig::default())?;
    let siib_cfg = SiibConfig::default();
    let mut rows = Vec::new();
    for (name, utts) in &systems {
        let refs = clean.as_deref().unwrap_or(utts);
        for &snr in &req.snrs {
            let cond = NoiseCondition::speech_shaped(snr, req.seed);
            let row = evaluate_condition(name, refs, utts, &cond, &ltas, &siib_cfg)?;
            log::info!("{}", row.tsv_line());
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| a.system.cmp(&b.system).then(a.snr_db.total_cmp(&b.snr_db)));
    let meta = ReportMeta {
        version: VERSION.into(),
        config_hashes: hashes.into_iter().collect(),
        seed: req.seed,
        snrs: req.snrs.clone(),
        systems: req.systems.iter().map(|(n, s)| (n.clone(), format!("{s:?}"))).collect(),
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    Ok(ExperimentReport { rows, meta })
}

fn fmt_snr(snr: f64) -> String {
    format!("{snr} dB")
}

/// Systems down, SNRs across, `mean (ci)` cells.
pub fn format_table(rows: &[EvalRow]) -> String {
    let mut snrs: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
    snrs.sort_by(|a, b| b.total_cmp(a));
    snrs.dedup();
    let mut systems: Vec<&str> = rows.iter().map(|r| r.system.as_str()).collect();
    systems.dedup();
    let mut s = String::from("system");
    for &snr in &snrs {
        s.push('\t');
        s.push_str(&fmt_snr(snr));
    }
    s.push('\n');
    for sys in systems {
        s.push_str(sys);
        for &snr in &snrs {
            s.push('\t');
            match rows.iter().find(|r| r.system == sys && r.snr_db == snr) {
                Some(r) => s.push_str(&format!("{:.1} ({:.1})", r.mean_oi, r.ci95)),
                None => s.push('-'),
            }
        }
        s.push('\n');
    }
    s
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

/// `report.tsv` rows, a `report.table.tsv` grid and a `report.meta.json`
/// sidecar. Only the sidecar carries a timestamp.
pub fn write_experiment_report(path: &Path, report: &ExperimentReport) -> Result<()> {
    write_report(path, &report.rows)?;
    fs::write(with_ext(path, "table.tsv"), format_table(&report.rows))?;
    fs::write(with_ext(path, "meta.json"), serde_json::to_string_pretty(&report.meta)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(system: &str, snr: f64, mean: f64) -> EvalRow {
        EvalRow { system: system.into(), snr_db: snr, mean_oi: mean, ci95: 1.25, n: 3, scores: Vec::new() }
    }

    #[test]
    fn table_cells() {
        let t = format_table(&[row("a", -3.0, 10.0), row("a", -1.0, 12.345), row("b", -3.0, 9.0)]);
        assert_eq!(t, "system\t-1 dB\t-3 dB\na\t12.3 (1.2)\t10.0 (1.2)\nb\t-\t9.0 (1.2)\n");
    }

    #[test]
    fn source_parsing() {
        assert_eq!(SystemSource::parse("out/conv").unwrap(), SystemSource::Dir("out/conv".into()));
        assert_eq!(
            SystemSource::parse("c/manifest.tsv@lombard").unwrap(),
            SystemSource::Manifest("c/manifest.tsv".into(), Some(Style::Lombard))
        );
        assert!(SystemSource::parse("m.tsv@shouting").is_err());
    }
}
